import heapq
import itertools
import math
import threading
from typing import Callable, Iterator, List, Sequence

from absl import logging

from sflx.dataclasses import DomainKind, DomainSpec
from sflx.errors import InvalidDomain, OutOfRange, SpectrumExhausted
from sflx.spectra.bessel import MAX_ARG, MAX_ORDER, bessel_zeros_in_window


def interval(length: float) -> DomainSpec:
    return _validated(DomainSpec(kind=DomainKind.INTERVAL, lengths=(float(length),)))


def box(*lengths: float) -> DomainSpec:
    return _validated(DomainSpec(kind=DomainKind.BOX, lengths=tuple(float(l) for l in lengths)))


def disc(radius: float) -> DomainSpec:
    return _validated(DomainSpec(kind=DomainKind.DISC, radius=float(radius)))


def custom(values: Sequence[float]) -> DomainSpec:
    return _validated(DomainSpec(kind=DomainKind.CUSTOM, values=tuple(float(v) for v in values)))


def _validated(spec: DomainSpec) -> DomainSpec:
    kind = DomainKind(spec.kind)
    if kind in (DomainKind.INTERVAL, DomainKind.BOX):
        if not spec.lengths or (kind == DomainKind.INTERVAL and len(spec.lengths) != 1):
            raise InvalidDomain(f"{kind.value} needs side lengths, got {spec.lengths}")
        if any(not (math.isfinite(l) and l > 0) for l in spec.lengths):
            raise InvalidDomain(f"Side lengths must be positive, got {spec.lengths}")
    elif kind == DomainKind.DISC:
        if not (math.isfinite(spec.radius) and spec.radius > 0):
            raise InvalidDomain(f"Disc radius must be positive, got {spec.radius}")
    elif kind == DomainKind.CUSTOM:
        values = spec.values
        if not values:
            raise InvalidDomain("Custom spectrum is empty")
        if any(not (math.isfinite(v) and v > 0) for v in values):
            raise InvalidDomain("Custom spectrum must be strictly positive")
        if any(b < a for a, b in zip(values, values[1:])):
            raise InvalidDomain("Custom spectrum must be nondecreasing")
    return spec


class DomainSpectrum:
    """Nondecreasing Dirichlet eigenvalues alpha_1 <= alpha_2 <= ... of -Laplace, listed with multiplicity.

    Values are generated lazily and cached; extension is guarded by a lock so concurrent `take`
    calls see identical prefixes.

    Args:
        source (DomainSpec): The domain the values belong to
        factory (Callable): Returns a fresh iterator over the values
        radius (float): Scale factor r of U_r = r U relative to `source`
    """

    def __init__(self, source: DomainSpec, factory: Callable[[], Iterator[float]], radius: float = 1.0):
        self.source = source
        self.radius = radius
        self._factory = factory
        self._values: List[float] = []
        self._iterator = factory()
        self._lock = threading.Lock()

    def _extend(self, n: int):
        if int(n) != n or n < 1:
            raise OutOfRange(f"Number of eigenvalues must be a positive integer, got {n}")
        with self._lock:
            while len(self._values) < n:
                try:
                    self._values.append(next(self._iterator))
                except StopIteration:
                    raise SpectrumExhausted(
                        f"{DomainKind(self.source.kind).value} spectrum provides only "
                        f"{len(self._values)} values, {n} requested"
                    ) from None

    def value(self, k: int) -> float:
        """alpha_k, 1-based."""
        self._extend(k)
        return self._values[k - 1]

    def take(self, n: int) -> List[float]:
        """The first n values, nondecreasing."""
        self._extend(n)
        return list(self._values[:n])

    def __iter__(self) -> Iterator[float]:
        """Iterate over all values; stops silently where a finite spectrum ends."""
        for k in itertools.count(1):
            try:
                v = self.value(k)
            except SpectrumExhausted:
                return
            yield v

    def clone(self) -> "DomainSpectrum":
        return DomainSpectrum(self.source, self._factory, self.radius)

    def __repr__(self):
        return f"DomainSpectrum(source={self.source}, radius={self.radius})"


def _interval_values(length: float) -> Iterator[float]:
    for k in itertools.count(1):
        yield (k * math.pi / length) ** 2


def _box_values(lengths: Sequence[float]) -> Iterator[float]:
    def value(index):
        return sum((k * math.pi / l) ** 2 for k, l in zip(index, lengths))

    start = (1,) * len(lengths)
    frontier = [(value(start), start)]
    seen = {start}
    while True:
        v, index = heapq.heappop(frontier)
        yield v
        for i in range(len(lengths)):
            successor = index[:i] + (index[i] + 1,) + index[i + 1:]
            if successor not in seen:
                seen.add(successor)
                heapq.heappush(frontier, (value(successor), successor))


def disc_certified_bound(radius: float) -> float:
    """Eigenvalues up to this bound are complete: (MAX_ARG / r)**2.

    Every Bessel zero in the evaluation window is enumerated, and orders above MAX_ORDER have
    no zero there.
    """
    return (MAX_ARG / radius) ** 2


def _disc_values(radius: float) -> Iterator[float]:
    """(beta_{nm} / r)**2 in increasing order, twice for n >= 1 (cosine and sine modes).

    j_{n,1} increases with n, so order n + 1 joins the frontier when the first zero of order n
    is emitted.
    """
    zeros = {}
    frontier = []

    def activate(n):
        if n > MAX_ORDER:
            return
        zeros[n] = bessel_zeros_in_window(n)
        if zeros[n]:
            heapq.heappush(frontier, ((zeros[n][0] / radius) ** 2, n, 1))

    activate(0)
    while frontier:
        v, n, m = heapq.heappop(frontier)
        yield v
        if n >= 1:
            yield v
        if m == 1:
            activate(n + 1)
        if m < len(zeros[n]):
            heapq.heappush(frontier, ((zeros[n][m] / radius) ** 2, n, m + 1))
    logging.warning("Disc spectrum is certified only up to %.4f", disc_certified_bound(radius))


def spectrum(spec: DomainSpec) -> DomainSpectrum:
    """Dirichlet spectrum of an interval, box or disc, or an explicit list of eigenvalues.

    Args:
        spec: Domain description

    Returns:
        DomainSpectrum
    """
    spec = _validated(spec)
    kind = DomainKind(spec.kind)
    if kind == DomainKind.INTERVAL:
        length = spec.lengths[0]
        return DomainSpectrum(spec, lambda: _interval_values(length))
    if kind == DomainKind.BOX:
        lengths = spec.lengths
        return DomainSpectrum(spec, lambda: _box_values(lengths))
    if kind == DomainKind.DISC:
        radius = spec.radius
        return DomainSpectrum(spec, lambda: _disc_values(radius))
    values = spec.values
    return DomainSpectrum(spec, lambda: iter(values))


def take(spec_or_spectrum, n: int) -> List[float]:
    if isinstance(spec_or_spectrum, DomainSpec):
        spec_or_spectrum = spectrum(spec_or_spectrum)
    return spec_or_spectrum.take(n)


def scale(parent: DomainSpectrum, r: float) -> DomainSpectrum:
    """Spectrum of U_r = r U: every eigenvalue divided by r**2."""
    if not (math.isfinite(r) and r > 0):
        raise InvalidDomain(f"Scale factor must be positive, got {r}")
    r2 = r * r

    def factory():
        return (v / r2 for v in parent.clone())

    return DomainSpectrum(parent.source, factory, radius=parent.radius * r)


def count_below(spec: DomainSpectrum, threshold: float) -> int:
    """Number of eigenvalues strictly below `threshold`."""
    count = 0
    for v in spec.clone():
        if v >= threshold:
            return count
        count += 1
    return count
