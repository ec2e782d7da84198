"""RMNK landscapes: generation, evaluation, correlation and serialization.

A landscape has ``M`` objectives over ``N`` bits. Objective ``m`` is the mean
of ``N`` local components; component ``i`` looks up a table of ``2**(K+1)``
values in (0, 1) indexed by the bits at ``(i, i_1, ..., i_K)``. Row indices
put ``x_i`` at bit 0 and the ``l``-th partner at bit ``l``.

All objectives are minimized. Solutions are indexed as integers with
variable ``i`` (0-based) at bit ``i``; :func:`bits_to_index` and
:func:`index_to_bits` convert between the two views.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from . import rng as _rng
from .errors import (
    ConfigurationError,
    FormatError,
    InputError,
    ResourceError,
    UndefinedCorrelationError,
    VersionError,
)
from .walsh import component_masks, merged_spectrum

FORMAT_VERSION = 1
EXHAUSTIVE_GUARD = 26
TABLE_EPS = 1e-12

_CALIBRATION_TOL = 1e-10
_CALIBRATION_MAX_ITER = 60


@dataclass(frozen=True)
class RmnkConfig:
    n_vars: int
    n_objectives: int
    epistasis: int
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        n, m, k, rho = self.n_vars, self.n_objectives, self.epistasis, self.rho
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise ConfigurationError(f"n_vars must be a positive integer, got {n!r}")
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ConfigurationError(f"n_objectives must be a positive integer, got {m!r}")
        if not isinstance(k, (int, np.integer)) or not 0 <= k <= n - 1:
            raise ConfigurationError(f"epistasis must satisfy 0 <= K <= N-1 = {n - 1}, got {k!r}")
        if not np.isfinite(rho):
            raise ConfigurationError(f"rho must be finite, got {rho!r}")
        if m == 1 and rho != 0:
            raise ConfigurationError(f"rho must be 0 when n_objectives = 1, got {rho}")
        if m >= 2 and not (-1.0 / (m - 1) <= rho <= 1.0):
            raise ConfigurationError(f"rho must lie in [-1/(M-1), 1] = [{-1.0 / (m - 1):.6g}, 1], got {rho}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed <= _rng.MAX_SEED:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        object.__setattr__(self, "n_vars", int(n))
        object.__setattr__(self, "n_objectives", int(m))
        object.__setattr__(self, "epistasis", int(k))
        object.__setattr__(self, "rho", float(rho))
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "n_objectives": self.n_objectives,
            "epistasis": self.epistasis,
            "rho": self.rho,
            "seed": self.seed,
        }


class RmnkLandscape:
    """An immutable RMNK instance.

    Attributes:
        config: the generating configuration.
        links: int array ``(M, N, K)`` of partner positions.
        tables: float array ``(M, N, 2**(K+1))`` of component values.
    """

    def __init__(self, config: RmnkConfig, links: np.ndarray, tables: np.ndarray):
        n, m, k = config.n_vars, config.n_objectives, config.epistasis
        links = np.array(links, dtype=np.int64).reshape(m, n, k)
        tables = np.array(tables, dtype=np.float64)
        if tables.shape != (m, n, 1 << (k + 1)):
            raise InputError(f"tables must have shape {(m, n, 1 << (k + 1))}, got {tables.shape}")
        for mi in range(m):
            for i in range(n):
                row = links[mi, i]
                if len(set(row.tolist())) != k or i in row or np.any((row < 0) | (row >= n)):
                    raise InputError(f"invalid partner list {row.tolist()} for objective {mi}, position {i}")
        if not np.all((tables > 0) & (tables < 1)):
            raise InputError("table values must lie in the open interval (0, 1)")
        links.flags.writeable = False
        tables.flags.writeable = False
        self.config = config
        self.links = links
        self.tables = tables
        self._positions = np.concatenate([np.broadcast_to(np.arange(n)[None, :, None], (m, n, 1)), links], axis=2)
        self._positions.flags.writeable = False

    @property
    def n_vars(self) -> int:
        return self.config.n_vars

    @property
    def n_objectives(self) -> int:
        return self.config.n_objectives

    @property
    def epistasis(self) -> int:
        return self.config.epistasis

    @property
    def positions(self) -> np.ndarray:
        """``(M, N, K+1)`` global positions of each local slot (slot 0 is ``i``)."""
        return self._positions

    @property
    def instance_id(self) -> str:
        """Content hash identifying this instance (config, links and tables)."""
        h = hashlib.sha256()
        h.update(json.dumps(self.config.to_dict(), sort_keys=True).encode())
        h.update(self.links.tobytes())
        h.update(self.tables.astype("<f8").tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, RmnkLandscape):
            return NotImplemented
        return (
            self.config == other.config
            and np.array_equal(self.links, other.links)
            and np.array_equal(self.tables, other.tables)
        )

    def __hash__(self):
        return hash(self.instance_id)

    def __repr__(self):
        c = self.config
        return f"RmnkLandscape(N={c.n_vars}, M={c.n_objectives}, K={c.epistasis}, rho={c.rho}, seed={c.seed})"

    def rows(self, bits: np.ndarray) -> np.ndarray:
        """Table rows ``(batch, M, N)`` selected by a ``(batch, N)`` bit array."""
        bits = np.asarray(bits, dtype=np.int64)
        local = bits[:, self._positions]  # (batch, M, N, K+1)
        weights = np.int64(1) << np.arange(self.epistasis + 1, dtype=np.int64)
        return local @ weights

    def evaluate_bits(self, bits: np.ndarray) -> np.ndarray:
        """Vectorized evaluation of a ``(batch, N)`` 0/1 array -> ``(batch, M)``."""
        bits = np.atleast_2d(bits)
        if bits.shape[1] != self.n_vars:
            raise InputError(f"expected bitstrings of length {self.n_vars}, got {bits.shape[1]}")
        rows = self.rows(bits)
        m_idx = np.arange(self.n_objectives)[None, :, None]
        i_idx = np.arange(self.n_vars)[None, None, :]
        return self.tables[m_idx, i_idx, rows].mean(axis=2)

    def evaluate_indices(self, indices) -> np.ndarray:
        """Evaluate integer-encoded solutions -> ``(batch, M)``."""
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        if np.any((idx < 0) | (idx >= (1 << self.n_vars))):
            raise InputError(f"solution index out of range for N={self.n_vars}")
        return self.evaluate_bits(index_to_bits(idx, self.n_vars))


def bits_to_index(bits) -> int:
    """Integer index of a bit sequence ``(x_1, ..., x_N)``; ``x_1`` is the least significant bit."""
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def index_to_bits(index, n_vars: int) -> np.ndarray:
    """Inverse of :func:`bits_to_index`; vectorized over ``index``."""
    idx = np.asarray(index, dtype=np.int64)
    return ((idx[..., None] >> np.arange(n_vars, dtype=np.int64)) & 1).astype(np.int8)


def bitstring(index: int, n_vars: int) -> str:
    """Text form ``x_1 x_2 ... x_N`` (variable order, no separators)."""
    return "".join(str(int(b)) for b in index_to_bits(index, n_vars))


def parse_bitstring(text: str) -> int:
    if not text or set(text) - {"0", "1"}:
        raise InputError(f"not a bitstring: {text!r}")
    return bits_to_index(int(c) for c in text)


def _as_bits(x, n_vars: int) -> np.ndarray:
    if isinstance(x, str):
        x = [int(c) for c in x] if set(x) <= {"0", "1"} else None
        if x is None:
            raise InputError("bitstring text may only contain '0' and '1'")
    bits = np.asarray(x)
    if bits.ndim != 1 or bits.shape[0] != n_vars:
        raise InputError(f"expected a bitstring of length {n_vars}, got shape {bits.shape}")
    if not np.all((bits == 0) | (bits == 1)):
        raise InputError("bitstring entries must be 0 or 1")
    return bits.astype(np.int8)


def evaluate(landscape: RmnkLandscape, x) -> np.ndarray:
    """Objective vector of one solution.

    ``x`` is a length-N sequence of 0/1 values (or a '0'/'1' string) listing
    ``x_1 .. x_N`` in variable order.
    """
    return landscape.evaluate_bits(_as_bits(x, landscape.n_vars)[None, :])[0]


def _guard(n_vars: int) -> None:
    if n_vars > EXHAUSTIVE_GUARD:
        raise ResourceError(f"exhaustive enumeration is limited to N <= {EXHAUSTIVE_GUARD}, got N = {n_vars}")


def evaluate_all(landscape: RmnkLandscape) -> np.ndarray:
    """Objective table ``(2**N, M)``; row ``x`` is the solution with integer index ``x``."""
    n = landscape.n_vars
    _guard(n)
    total = 1 << n
    chunk = max(1, (1 << 22) // (landscape.n_objectives * n * (landscape.epistasis + 1)))
    out = np.empty((total, landscape.n_objectives))
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        out[start:stop] = landscape.evaluate_bits(index_to_bits(np.arange(start, stop), n))
    return out


def measured_correlation(landscape: RmnkLandscape) -> np.ndarray:
    """Exhaustive Pearson correlation matrix of the objectives over all ``2**N`` solutions."""
    values = evaluate_all(landscape)
    std = values.std(axis=0)
    if np.any(std == 0):
        raise UndefinedCorrelationError(f"objectives {np.flatnonzero(std == 0).tolist()} are constant")
    corr = np.atleast_2d(np.corrcoef(values, rowvar=False))
    corr = (corr + corr.T) / 2
    np.fill_diagonal(corr, 1.0)
    return corr


def spectral_covariance(landscape: RmnkLandscape) -> np.ndarray:
    """Covariance of the objectives over uniform ``x`` computed from Walsh spectra.

    Uses Parseval: ``cov(F_a, F_b) = sum_{S != {}} F_a^(S) F_b^(S)``. Cost is
    ``O(M N 2**(K+1))`` instead of ``O(M 2**N)``.
    """
    spectra = []
    for m in range(landscape.n_objectives):
        masks = component_masks(landscape.positions[m])
        supports, coef = merged_spectrum(landscape.tables[m], masks, scale=1.0 / landscape.n_vars)
        spectra.append(dict(zip(supports.tolist(), coef.tolist())))
    keys = sorted(set().union(*spectra) - {0})
    mat = np.array([[s.get(key, 0.0) for key in keys] for s in spectra])
    return mat @ mat.T


# -- generation --------------------------------------------------------------


def _equicorrelation_sqrt(m: int, rho: float) -> np.ndarray:
    """Symmetric square root of ``(1 - rho) I + rho J`` in closed form."""
    j = np.full((m, m), 1.0 / m)
    return np.sqrt(max(1.0 - rho, 0.0)) * (np.eye(m) - j) + np.sqrt(max(1.0 - rho + m * rho, 0.0)) * j


def _sym_sqrt(a: np.ndarray, inverse: bool = False) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.T) / 2)
    w = np.clip(w, 0.0, None)
    if inverse:
        w = 1.0 / np.sqrt(w)
    else:
        w = np.sqrt(w)
    return (v * w) @ v.T


def _nearest_correlation(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.T) / 2)
    a = (v * np.clip(w, 0.0, None)) @ v.T
    d = np.sqrt(np.clip(np.diag(a), 1e-300, None))
    a = a / np.outer(d, d)
    np.fill_diagonal(a, 1.0)
    return a


def _to_unit_interval(latent: np.ndarray) -> np.ndarray:
    return np.clip(ndtr(latent), TABLE_EPS, 1.0 - TABLE_EPS)


def _spectral_gram(values: np.ndarray, masks: np.ndarray, n: int) -> np.ndarray:
    """Gram matrix of the non-constant Walsh spectra of ``m`` functions sharing ``masks``."""
    supports, coef = merged_spectrum(values, masks, scale=1.0 / n)
    coef = coef[supports != 0]
    return coef.T @ coef


def _calibrate(latent: np.ndarray, masks: np.ndarray, rho: float, n: int) -> np.ndarray:
    """Re-mix latent Gaussian columns so the realized objective correlation equals ``rho``.

    The latent sample is first whitened in the covariance geometry of the
    objective map, then mixed with an adjusted correlation matrix that is
    corrected until the correlation of the mapped (uniform) tables hits the
    target. Returns the calibrated latent sample; falls back to the plain
    equicorrelated draw if the geometry is degenerate.
    """
    m = latent.shape[2]
    target = (1.0 - rho) * np.eye(m) + rho
    plain = latent @ _equicorrelation_sqrt(m, rho)
    gram = _spectral_gram(latent, masks, n)
    w = np.linalg.eigvalsh(gram)
    if w.min() <= 1e-10 * max(w.max(), 1e-300):
        return plain
    whitened = latent @ _sym_sqrt(gram / (np.trace(gram) / m), inverse=True)
    adjusted = target.copy()
    best, best_err = plain, np.inf
    for _ in range(_CALIBRATION_MAX_ITER):
        candidate = whitened @ _sym_sqrt(adjusted)
        g = _spectral_gram(_to_unit_interval(candidate), masks, n)
        d = np.sqrt(np.diag(g))
        realized = g / np.outer(d, d)
        err = np.abs(realized - target).max()
        if err < best_err:
            best, best_err = candidate, err
        if err < _CALIBRATION_TOL:
            break
        adjusted = _nearest_correlation(adjusted + (target - realized))
    return best


def generate(config: RmnkConfig) -> RmnkLandscape:
    """Generate the landscape for ``config`` (deterministic in ``config.seed``).

    Draw order from the single seeded stream: partner lists position by
    position, then one standard-normal array of shape ``(N, 2**(K+1), M)``.
    Partner lists are shared by all objectives so that table draws at the
    same (position, row) describe the same variables. For ``M >= 2`` the
    normals are mixed to pairwise correlation ``rho`` and calibrated so the
    exact correlation of the objective functions equals ``rho``; each value
    is then mapped through the standard normal CDF into (0, 1).
    """
    n, m, k, rho = config.n_vars, config.n_objectives, config.epistasis, config.rho
    gen = _rng.stream(config.seed)
    links = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        links[i] = gen.choice(others, size=k, replace=False)
    latent = gen.standard_normal((n, 1 << (k + 1), m))
    if m >= 2:
        masks = component_masks(np.concatenate([np.arange(n)[:, None], links], axis=1))
        if rho == 1.0:
            latent = latent[:, :, :1].repeat(m, axis=2)
        else:
            latent = _calibrate(latent, masks, rho, n)
    tables = np.moveaxis(_to_unit_interval(latent), 2, 0)
    return RmnkLandscape(config, np.broadcast_to(links, (m, n, k)), tables)


# -- serialization -----------------------------------------------------------


def to_dict(landscape: RmnkLandscape) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": landscape.config.to_dict(),
        "links": landscape.links.tolist(),
        "tables": landscape.tables.tolist(),
    }


def dumps(landscape: RmnkLandscape) -> str:
    return json.dumps(to_dict(landscape), indent=1) + "\n"


def save(landscape: RmnkLandscape, path) -> Path:
    path = Path(path)
    path.write_text(dumps(landscape), encoding="ascii")
    return path


def from_dict(data: dict) -> RmnkLandscape:
    if not isinstance(data, dict):
        raise FormatError("instance file must contain a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        config = RmnkConfig(**data["config"])
        links, tables = data["links"], data["tables"]
    except KeyError as exc:
        raise FormatError(f"missing field {exc}") from None
    except (TypeError, ConfigurationError) as exc:
        raise FormatError(f"invalid config: {exc}") from None
    n, m, k = config.n_vars, config.n_objectives, config.epistasis
    rows = 1 << (k + 1)
    if len(links) != m or any(len(lm) != n or any(len(li) != k for li in lm) for lm in links):
        raise FormatError(f"links must have shape ({m}, {n}, {k})")
    if not isinstance(tables, list) or len(tables) != m:
        raise FormatError(f"tables must have {m} objectives")
    for mi, tm in enumerate(tables):
        if len(tm) != n:
            raise FormatError(f"tables[{mi}] has {len(tm)} positions, expected {n}")
        for i, ti in enumerate(tm):
            if len(ti) != rows:
                raise FormatError(f"tables[{mi}][{i}] has {len(ti)} rows, expected {rows}")
    try:
        return RmnkLandscape(config, np.array(links), np.array(tables, dtype=float))
    except (InputError, ValueError, TypeError) as exc:
        raise FormatError(str(exc)) from None


def loads(text: str | bytes) -> RmnkLandscape:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("instance file is not valid UTF-8", offset=exc.start) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise FormatError(f"malformed instance file: {exc.msg}", offset=offset) from None
    return from_dict(data)


def load(path) -> RmnkLandscape:
    return loads(Path(path).read_bytes())
