import jax

# Index arithmetic relies on eigenvalue signs near 1e-9, single precision is not enough.
jax.config.update("jax_enable_x64", True)

__DYNAMIC__ = False
if __DYNAMIC__:
    from mkinit import dynamic_mkinit
    exec(dynamic_mkinit.dynamic_init(__name__))
