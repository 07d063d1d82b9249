"""Wiretap channel pairs: construction, validation and spectral helpers.

All matrices are complex numpy arrays. Hermitian inputs are symmetrized on
the way in and small negative eigenvalues coming from round-off are
clipped, so downstream code can rely on exact Hermitian PSD structure.
"""

import enum
import json
import numbers
from dataclasses import dataclass, field

import numpy as np

from .errors import (ChannelError, DimensionMismatch, MalformedInput,
                     NotPositiveSemidefinite, NotStrictlyDegraded)

__all__ = [
    'DEFAULT_TOL', 'Classification', 'SpectralDecomposition', 'GramPair',
    'DifferenceSplit', 'as_matrix', 'hermitian', 'repair_psd', 'eigh_desc',
    'gram_from_channel', 'classify', 'difference_split', 'compute_z',
    'nullspace_projector', 'inv_hermitian', 'decode_matrix', 'encode_matrix',
    'pair_from_dict', 'load_pair',
]

DEFAULT_TOL = 1e-9
# eigenvalues in [-PSD_CLIP * lmax, 0) are treated as round-off
PSD_CLIP = 1e-10
HERMITIAN_TOL = 1e-12


class Classification(enum.Enum):
    STRICTLY_DEGRADED = 'StrictlyDegraded'
    DEGRADED_ON_NULLSPACE = 'DegradedOnNullspaceCondition'
    NON_DEGRADED = 'NonDegraded'
    REVERSED = 'Reversed'

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with matching eigenvector columns."""
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        v = self.vectors
        return (v * self.values) @ v.conj().T


def as_matrix(a):
    """Return `a` as a finite 2-D complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ChannelError('expected a non-empty 2-D matrix, got shape '
                           f'{m.shape}')
    if not np.all(np.isfinite(m)):
        raise ChannelError('matrix has non-finite entries')
    return m


def hermitian(a, tol=HERMITIAN_TOL):
    """Validate Hermitian symmetry and return the symmetrized matrix."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f'matrix is not square: {m.shape}')
    scale = np.max(np.abs(m))
    if np.max(np.abs(m - m.conj().T)) > tol * max(scale, 1.0):
        raise ChannelError('matrix is not Hermitian')
    return 0.5 * (m + m.conj().T)


def eigh_desc(a):
    """Hermitian eigendecomposition with eigenvalues sorted descending."""
    vals, vecs = np.linalg.eigh(a)
    return SpectralDecomposition(vals[::-1].copy(), vecs[:, ::-1].copy())


def repair_psd(a, clip=PSD_CLIP):
    """Symmetrize and clip round-off negative eigenvalues to zero.

    Raises
    ------
    NotPositiveSemidefinite
        If an eigenvalue is below ``-clip * lmax``.
    """
    h = hermitian(a)
    dec = eigh_desc(h)
    lmax = max(dec.values[0], 0.0)
    if dec.values[-1] < -clip * lmax or (lmax == 0.0 and dec.values[-1] < 0):
        raise NotPositiveSemidefinite(
            f'minimum eigenvalue {dec.values[-1]:.3e} is below the PSD '
            f'tolerance (max eigenvalue {lmax:.3e})')
    if dec.values[-1] < 0:
        vals = np.clip(dec.values, 0.0, None)
        h = (dec.vectors * vals) @ dec.vectors.conj().T
        h = 0.5 * (h + h.conj().T)
    return h


def inv_hermitian(a):
    a_inv = np.linalg.inv(a)
    return 0.5 * (a_inv + a_inv.conj().T)


def gram_from_channel(h):
    """Gram matrix ``H^+ H`` of a channel matrix (cols x cols, PSD)."""
    h = as_matrix(h)
    w = h.conj().T @ h
    return 0.5 * (w + w.conj().T)


def _lmax(a):
    return float(np.max(np.abs(np.linalg.eigvalsh(a))))


def classify(w1, w2, tol=DEFAULT_TOL):
    """Degradedness class of the pair ``(w1, w2)``.

    Strict degradedness is tested first; a singular ``w1`` can still be
    degraded in the projected sense if its null space is shared by ``w2``
    and the difference is positive definite on the complement.
    """
    if w1.shape != w2.shape:
        raise DimensionMismatch(f'W1 is {w1.shape} but W2 is {w2.shape}')
    lmax1 = float(np.linalg.eigvalsh(w1)[-1])
    diff = np.linalg.eigvalsh(w1 - w2)
    if diff[0] > tol * lmax1:
        return Classification.STRICTLY_DEGRADED
    scale = max(lmax1, float(np.linalg.eigvalsh(w2)[-1]), np.finfo(float).tiny)
    if _nullspace_condition(w1, w2, tol):
        return Classification.DEGRADED_ON_NULLSPACE
    if diff[-1] <= tol * scale:
        return Classification.REVERSED
    return Classification.NON_DEGRADED


def _nullspace_condition(w1, w2, tol):
    dec = eigh_desc(w1)
    lmax1 = dec.values[0]
    if lmax1 <= 0:
        return False
    active = dec.values > tol * lmax1
    u_perp, u_null = dec.vectors[:, active], dec.vectors[:, ~active]
    if u_null.shape[1] == 0:
        return False
    scale = max(lmax1, float(np.linalg.eigvalsh(w2)[-1]))
    if np.linalg.norm(u_null.conj().T @ w2 @ u_null, 2) > tol * scale:
        return False
    proj = u_perp.conj().T @ (w1 - w2) @ u_perp
    return bool(np.linalg.eigvalsh(proj)[0] > tol * lmax1)


@dataclass(frozen=True)
class GramPair:
    """Validated pair of legitimate and eavesdropper Gram matrices."""
    w1: np.ndarray
    w2: np.ndarray
    name: str = ''
    tol: float = DEFAULT_TOL
    classification: Classification = field(init=False)

    def __post_init__(self):
        w1 = repair_psd(self.w1)
        w2 = repair_psd(self.w2)
        if w1.shape != w2.shape:
            raise DimensionMismatch(f'W1 is {w1.shape} but W2 is {w2.shape}')
        w1.setflags(write=False)
        w2.setflags(write=False)
        object.__setattr__(self, 'w1', w1)
        object.__setattr__(self, 'w2', w2)
        object.__setattr__(self, 'classification', classify(w1, w2, self.tol))

    @classmethod
    def from_channels(cls, h1, h2, **kwargs):
        h1, h2 = as_matrix(h1), as_matrix(h2)
        if h1.shape[1] != h2.shape[1]:
            raise DimensionMismatch('H1 and H2 must have the same number of '
                                    'transmit antennas (columns)')
        return cls(gram_from_channel(h1), gram_from_channel(h2), **kwargs)

    @property
    def m(self):
        return self.w1.shape[0]

    @property
    def difference(self):
        return self.w1 - self.w2

    def rotated(self, u):
        """Pair conjugated by a unitary: ``U^+ W U``."""
        uh = u.conj().T
        return GramPair(uh @ self.w1 @ u, uh @ self.w2 @ u, self.name, self.tol)


@dataclass(frozen=True)
class DifferenceSplit:
    """Eigenmodes of ``W1 - W2`` split into strictly positive and the rest."""
    u_plus: np.ndarray
    d_plus: np.ndarray
    u_rest: np.ndarray
    d_rest: np.ndarray

    @property
    def r_plus(self):
        return len(self.d_plus)


def difference_split(pair, tol=DEFAULT_TOL):
    dec = eigh_desc(pair.w1 - pair.w2)
    scale = float(np.max(np.abs(dec.values)))
    pos = dec.values > tol * scale
    if scale == 0.0:
        pos[:] = False
    return DifferenceSplit(dec.vectors[:, pos], dec.values[pos],
                           dec.vectors[:, ~pos], dec.values[~pos])


def compute_z(pair, tol=None):
    """``Z = W2 + W2 (W1 - W2)^{-1} W2``.

    Never inverts W2, so singular eavesdropper channels are fine.
    """
    tol = pair.tol if tol is None else tol
    if classify(pair.w1, pair.w2, tol) is not Classification.STRICTLY_DEGRADED:
        raise NotStrictlyDegraded('W1 - W2 is not positive definite')
    w2 = pair.w2
    z = w2 + w2 @ np.linalg.solve(pair.w1 - w2, w2)
    return 0.5 * (z + z.conj().T)


def nullspace_projector(w1, tol=DEFAULT_TOL):
    """Orthonormal basis of the orthogonal complement of ``null(w1)``."""
    dec = eigh_desc(w1)
    lmax = dec.values[0]
    if lmax <= 0:
        return dec.vectors[:, :0]
    return dec.vectors[:, dec.values > tol * lmax]


def _decode_entry(x):
    if isinstance(x, bool):
        raise MalformedInput('booleans are not matrix entries')
    if isinstance(x, numbers.Real):
        return complex(float(x), 0.0)
    if (isinstance(x, (list, tuple)) and len(x) == 2
            and all(isinstance(v, numbers.Real) and not isinstance(v, bool)
                    for v in x)):
        return complex(float(x[0]), float(x[1]))
    raise MalformedInput(f'matrix entry {x!r} is neither a number nor [re, im]')


def decode_matrix(rows):
    """Matrix from a JSON array of rows with real or ``[re, im]`` entries."""
    if not isinstance(rows, list) or not rows:
        raise MalformedInput('a matrix must be a non-empty array of rows')
    if not all(isinstance(row, list) and row for row in rows):
        raise MalformedInput('every matrix row must be a non-empty array')
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise MalformedInput('matrix rows have different lengths')
    return as_matrix([[_decode_entry(x) for x in row] for row in rows])


def encode_matrix(a):
    """JSON-ready rows of ``[re, im]`` pairs."""
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def pair_from_dict(obj, tol=DEFAULT_TOL):
    """Build a :class:`GramPair` from a parsed channel document.

    The document holds either channel matrices ``H1``/``H2`` or Gram
    matrices ``W1``/``W2``, plus an optional ``name``.
    """
    if not isinstance(obj, dict):
        raise MalformedInput('channel document must be a JSON object')
    name = obj.get('name', '')
    if not isinstance(name, str):
        raise MalformedInput('"name" must be a string')
    has_h = 'H1' in obj or 'H2' in obj
    has_w = 'W1' in obj or 'W2' in obj
    if has_h == has_w:
        raise MalformedInput('give exactly one of the pairs H1/H2 or W1/W2')
    keys = ('H1', 'H2') if has_h else ('W1', 'W2')
    missing = [k for k in keys if k not in obj]
    if missing:
        raise MalformedInput(f'missing key(s): {", ".join(missing)}')
    a, b = (decode_matrix(obj[k]) for k in keys)
    if has_h:
        return GramPair.from_channels(a, b, name=name, tol=tol)
    return GramPair(a, b, name=name, tol=tol)


def load_pair(path, tol=DEFAULT_TOL):
    try:
        with open(path, encoding='utf-8') as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f'{path}: invalid JSON ({exc})') from exc
    return pair_from_dict(obj, tol)
