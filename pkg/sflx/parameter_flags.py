from absl import flags

# N.B. Use can pass the flag --flagfile=PATH_TO_FLAGFILE to add flags without typing them out
# Dashed spellings (--n-blocks, --n-values) are rewritten to these names before parsing

# Input / output
flags.DEFINE_string("problem", None, "Path to a problem JSON file")
flags.DEFINE_string("batch", None, "Directory of problem JSON files to process concurrently "
                                   "(writes <stem>.report.json, or <stem>.curves.csv for `curves`, next to each file)")
flags.DEFINE_integer("jobs", 1, "Number of concurrent workers for --batch")
flags.DEFINE_boolean("json", False, "Print the report as JSON instead of text")
flags.DEFINE_string("out", None, "Write the report (or the curves CSV) to this path instead of stdout")
# Numerical overrides (take precedence over the problem file)
flags.DEFINE_integer("n_blocks", None, "Number of Dirichlet modes kept by the Galerkin oracle "
                                       "(default: truncation rank over the path + 2; also accepted as --n-blocks)")
flags.DEFINE_integer("samples", None, "Number of lambda samples for crossing search and curves")
flags.DEFINE_float("tol", None, "Witness margin tolerance for strict inequalities")
# Spectrum subcommand without a problem file
flags.DEFINE_enum("domain", "interval", ["interval", "box", "disc"], "Domain kind for `spectrum`")
flags.DEFINE_list("length", ["3.141592653589793"], "Side length(s) of an interval or box for `spectrum`")
flags.DEFINE_float("radius", 1.0, "Disc radius for `spectrum`")
flags.DEFINE_integer("n_values", 10, "Number of eigenvalues printed by `spectrum`")
flags.DEFINE_boolean("DEBUG", False, "Debug mode (verbose logging)")
