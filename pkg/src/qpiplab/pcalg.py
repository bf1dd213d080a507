"""Pauli and Clifford algebra over prime-dimension wires.

Symbolic Paulis carry exponent vectors only (phases dropped); every
symbolic identity used downstream is checked against dense conjugation up
to phase.  The qubit Clifford groups C_1 and C_2 are enumerated exactly by
closure over generator words; three-qubit elements come from a random
symplectic construction and are flagged experimental.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .qcore import RegisterShape, UnitaryMatrix, inv_mod

CACHE_ENV = "QPIPLAB_CACHE_DIR"
_CACHE_VERSION = 1

# Guard for exact group averaging: elements * dim^3 budget.
_AVERAGE_FLOP_CAP = 2e10


class SymbolicPauli:
    """Z^z X^x per wire over F_q, phases untracked."""

    __slots__ = ("q", "x", "z")

    def __init__(self, q: int, x: Sequence[int], z: Sequence[int]):
        x = np.asarray(x, dtype=np.int64) % q
        z = np.asarray(z, dtype=np.int64) % q
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z must be equal-length vectors")
        self.q = q
        self.x = x
        self.z = z

    @property
    def num_wires(self) -> int:
        return len(self.x)

    def is_identity(self) -> bool:
        return not self.x.any() and not self.z.any()

    def compose(self, other: "SymbolicPauli") -> "SymbolicPauli":
        if other.q != self.q or other.num_wires != self.num_wires:
            raise ValueError("mismatched Paulis")
        return SymbolicPauli(self.q, self.x + other.x, self.z + other.z)

    def inverse(self) -> "SymbolicPauli":
        return SymbolicPauli(self.q, -self.x, -self.z)

    def restrict(self, wires: Sequence[int]) -> "SymbolicPauli":
        w = list(wires)
        return SymbolicPauli(self.q, self.x[w], self.z[w])

    def __eq__(self, other):
        return (isinstance(other, SymbolicPauli) and self.q == other.q
                and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z))

    def __hash__(self):
        return hash((self.q, self.x.tobytes(), self.z.tobytes()))

    def __repr__(self):
        return f"SymbolicPauli(q={self.q}, x={self.x.tolist()}, z={self.z.tolist()})"

    @classmethod
    def identity(cls, q: int, n: int) -> "SymbolicPauli":
        return cls(q, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))


@dataclass(frozen=True)
class GateTag:
    """One gate from the library: F, F_r, SUM, T, M_r, CPG, H, K, CNOT."""

    name: str
    r: int = 0

    _ARITY = {"F": 1, "F_r": 1, "SUM": 2, "T": 3, "M_r": 1, "CPG": 2,
              "H": 1, "K": 1, "CNOT": 2}

    def __post_init__(self):
        if self.name not in self._ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        if self.name in ("F_r", "M_r") and self.r == 0:
            raise ValueError(f"{self.name} requires r != 0")

    @property
    def arity(self) -> int:
        return self._ARITY[self.name]


def _omega(q: int) -> complex:
    return np.exp(2j * np.pi / q)


def pauli_matrix_1(q: int, x: int, z: int) -> np.ndarray:
    """Single-wire Z^z X^x: |a> -> w^{z(a+x)} |a+x>."""
    a = np.arange(q)
    m = np.zeros((q, q), dtype=np.complex128)
    m[(a + x) % q, a] = _omega(q) ** (z * ((a + x) % q))
    return m


def pauli_matrix(p: SymbolicPauli) -> UnitaryMatrix:
    """Dense matrix of a symbolic Pauli (wire 0 most significant)."""
    m = np.array([[1.0 + 0j]])
    for x, z in zip(p.x, p.z):
        m = np.kron(m, pauli_matrix_1(p.q, int(x), int(z)))
    return UnitaryMatrix(RegisterShape((p.q,) * p.num_wires), m,
                         check_unitary=False)


def gate_matrix(g: GateTag, q: int) -> UnitaryMatrix:
    """Defining dense matrix of a library gate over F_q."""
    w = _omega(q)
    if g.name in ("H", "K", "CNOT") and q != 2:
        raise ValueError(f"{g.name} is a qubit gate")
    if g.name in ("F", "F_r"):
        r = 1 if g.name == "F" else g.r % q
        a = np.arange(q)
        m = w ** (r * np.outer(a, a)) / np.sqrt(q)
    elif g.name == "H":
        m = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    elif g.name == "K":
        m = np.diag([1.0, 1.0j])
    elif g.name in ("SUM", "CNOT"):
        m = np.zeros((q * q, q * q))
        for a in range(q):
            for b in range(q):
                m[a * q + (a + b) % q, a * q + b] = 1.0
    elif g.name == "T":
        m = np.zeros((q ** 3,) * 2)
        for a in range(q):
            for b in range(q):
                for c in range(q):
                    m[(a * q + b) * q + (c + a * b) % q, (a * q + b) * q + c] = 1.0
    elif g.name == "M_r":
        r = g.r % q
        if r == 0:
            raise ValueError("M_r requires r nonzero mod q")
        m = np.zeros((q, q))
        a = np.arange(q)
        m[(r * a) % q, a] = 1.0
    elif g.name == "CPG":
        a = np.arange(q)
        m = np.diag((w ** np.outer(a, a)).reshape(-1))
    else:
        raise ValueError(f"unknown gate {g.name!r}")
    n = g.arity
    return UnitaryMatrix(RegisterShape((q,) * n), np.asarray(m, dtype=np.complex128),
                         check_unitary=False)


def conjugate_symbolic(g: GateTag, p: SymbolicPauli,
                       wires: Sequence[int] | None = None,
                       power: int = 1,
                       dagger: bool = False) -> SymbolicPauli:
    """Exponent-level image of g P g^dag (phase dropped).

    `wires` selects which wires of p the gate touches (defaults to all,
    which then must match the gate arity).  `power` repeats the gate;
    `dagger` conjugates by the inverse instead.
    """
    q = p.q
    if wires is None:
        wires = tuple(range(p.num_wires))
    if len(wires) != g.arity:
        raise ValueError(f"{g.name} acts on {g.arity} wires, got {len(wires)}")
    x = p.x.copy()
    z = p.z.copy()
    t = (-power if dagger else power) % q

    if g.name in ("SUM", "CNOT"):
        a, b = wires
        # SUM^t: Z^zA X^xA (x) Z^zB X^xB -> Z^{zA-t zB} X^xA (x) Z^zB X^{xB+t xA}
        z[a] = (z[a] - t * z[b]) % q
        x[b] = (x[b] + t * x[a]) % q
    elif g.name == "CPG":
        a, b = wires
        z[a] = (z[a] + t * x[b]) % q
        z[b] = (z[b] + t * x[a]) % q
    elif g.name in ("F", "F_r", "H"):
        if power != 1:
            raise ValueError("Fourier conjugation supports power 1 only")
        r = g.r % q if g.name == "F_r" else 1
        (i,) = wires
        if dagger:
            # inverse of (z,x) -> (r x, -r^{-1} z)
            z[i], x[i] = (-r * x[i]) % q, (inv_mod(r, q) * z[i]) % q
        else:
            z[i], x[i] = (r * x[i]) % q, (-inv_mod(r, q) * z[i]) % q
    elif g.name == "M_r":
        if power != 1:
            raise ValueError("M_r conjugation supports power 1 only")
        r = g.r % q
        (i,) = wires
        if dagger:
            r = inv_mod(r, q)
        z[i] = (inv_mod(r, q) * z[i]) % q
        x[i] = (r * x[i]) % q
    elif g.name == "K":
        (i,) = wires
        # K X K^dag = i XZ, K Z K^dag = Z
        z[i] = (z[i] + t * x[i]) % 2
    else:
        raise ValueError(f"no symbolic rule for gate {g.name!r}")
    return SymbolicPauli(q, x, z)


def conjugate_through(circuit: Iterable[tuple[GateTag, Sequence[int], int]],
                      p: SymbolicPauli, dagger: bool = False) -> SymbolicPauli:
    """Conjugate p through a gate list [(tag, wires, power)].

    With dagger=False computes (g_k ... g_1) P (g_k ... g_1)^dag reading
    the list left to right as application order; dagger=True undoes it.
    """
    steps = list(circuit)
    if dagger:
        steps = steps[::-1]
    for tag, wires, power in steps:
        p = conjugate_symbolic(tag, p, wires=wires, power=power, dagger=dagger)
    return p


# ------------------------------------------------------------------ qubits

def _qubit_pauli(x: int, z: int) -> np.ndarray:
    return pauli_matrix_1(2, x, z)


def _pauli_basis(n: int) -> np.ndarray:
    """All 4^n qubit Paulis Z^z X^x, stacked; index = interleaved (x,z) bits."""
    out = np.zeros((4 ** n, 2 ** n, 2 ** n), dtype=np.complex128)
    for idx in range(4 ** n):
        bits = [(idx >> (2 * (n - 1 - w))) & 3 for w in range(n)]
        m = np.array([[1.0 + 0j]])
        for b in bits:
            m = np.kron(m, _qubit_pauli(b & 1, b >> 1))
        out[idx] = m
    return out


_BASIS_CACHE: dict[int, np.ndarray] = {}


def qubit_pauli_basis(n: int) -> np.ndarray:
    if n not in _BASIS_CACHE:
        _BASIS_CACHE[n] = _pauli_basis(n)
    return _BASIS_CACHE[n]


class CliffordElement:
    """A Clifford unitary on n qubits plus the word that produced it."""

    __slots__ = ("n", "matrix", "generator_word", "key")

    def __init__(self, n: int, matrix: UnitaryMatrix,
                 generator_word: tuple[str, ...] | None,
                 key: tuple | None = None):
        self.n = n
        self.matrix = matrix
        self.generator_word = generator_word
        self.key = key if key is not None else conjugation_key(matrix.entries, n)

    def dagger_matrix(self) -> np.ndarray:
        return self.matrix.entries.conj().T

    def __repr__(self):
        word = "*".join(self.generator_word) if self.generator_word else "<built>"
        return f"CliffordElement(n={self.n}, word={word})"


def conjugation_key(u: np.ndarray, n: int) -> tuple:
    """Canonical key: images of the 2n Pauli generators incl. phase.

    Equal keys iff the unitaries agree modulo global phase.
    """
    basis = qubit_pauli_basis(n)
    dag = basis.conj().transpose(0, 2, 1)
    key = []
    for w in range(n):
        for kind in (1, 2):  # X then Z on wire w
            idx = kind << (2 * (n - 1 - w))
            m = u @ basis[idx] @ u.conj().T
            coeffs = np.einsum("kij,ji->k", dag, m) / 2 ** n
            j = int(np.argmax(np.abs(coeffs)))
            c = coeffs[j]
            phase = int(np.round(np.angle(c) / (np.pi / 2))) % 4
            if abs(abs(c) - 1.0) > 1e-6:
                raise ValueError("not a Clifford: Pauli image not a Pauli")
            key.append((j, phase))
    return tuple(key)


def _generators(n: int) -> dict[str, np.ndarray]:
    h = gate_matrix(GateTag("H"), 2).entries
    k = gate_matrix(GateTag("K"), 2).entries
    if n == 1:
        return {"H": h, "K": k}
    cnot = gate_matrix(GateTag("CNOT"), 2).entries
    eye = np.eye(2)
    gens = {
        "H0": np.kron(h, eye), "H1": np.kron(eye, h),
        "K0": np.kron(k, eye), "K1": np.kron(eye, k),
        "CNOT01": cnot,
    }
    # control on wire 1, target wire 0
    swapped = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            swapped[((a + b) % 2) * 2 + b, a * 2 + b] = 1.0
    gens["CNOT10"] = swapped
    return gens


_ENUM_CACHE: dict[int, list[CliffordElement]] = {}


def _cache_path(n: int) -> str | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    gens = "+".join(sorted(_generators(n)))
    return os.path.join(root, f"clifford_n{n}_{gens}_v{_CACHE_VERSION}.npz")


def enumerate_clifford(n: int) -> list[CliffordElement]:
    """All Clifford elements on n qubits, distinct modulo global phase.

    Breadth-first closure over generator words; 24 elements at n=1 and
    11520 at n=2.  Results are memoized and optionally cached on disk
    (set QPIPLAB_CACHE_DIR).
    """
    if n not in (1, 2):
        raise ValueError("exact enumeration supports n in {1, 2}")
    if n in _ENUM_CACHE:
        return _ENUM_CACHE[n]

    path = _cache_path(n)
    if path and os.path.exists(path):
        blob = np.load(path, allow_pickle=False)
        mats = blob["matrices"]
        words = [tuple(w.split("*")) if w else () for w in blob["words"]]
        shape = RegisterShape((2,) * n)
        elems = [CliffordElement(n, UnitaryMatrix(shape, m, check_unitary=False), w)
                 for m, w in zip(mats, words)]
        _ENUM_CACHE[n] = elems
        return elems

    gens = _generators(n)
    shape = RegisterShape((2,) * n)
    eye = np.eye(2 ** n, dtype=np.complex128)
    start = CliffordElement(n, UnitaryMatrix(shape, eye, check_unitary=False), ())
    seen = {start.key: start}
    frontier = deque([start])
    while frontier:
        cur = frontier.popleft()
        for name, g in gens.items():
            m = g @ cur.matrix.entries
            key = conjugation_key(m, n)
            if key in seen:
                continue
            elem = CliffordElement(
                n, UnitaryMatrix(shape, m, check_unitary=False),
                cur.generator_word + (name,), key)
            seen[key] = elem
            frontier.append(elem)
    elems = list(seen.values())
    _ENUM_CACHE[n] = elems

    if path:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        np.savez_compressed(
            path,
            matrices=np.stack([e.matrix.entries for e in elems]),
            words=np.array(["*".join(e.generator_word) for e in elems]))
    return elems


# ------------------------------------------------------- random sampling

def _symp_form(u: np.ndarray, v: np.ndarray) -> int:
    """Symplectic inner product on F_2^{2n}, layout (x_0, z_0, x_1, z_1, ...)."""
    n = len(u) // 2
    s = 0
    for i in range(n):
        s ^= (u[2 * i] & v[2 * i + 1]) ^ (u[2 * i + 1] & v[2 * i])
    return s


def _transvection_unitary(v: np.ndarray) -> np.ndarray:
    """exp-style unitary (I + i P_v)/sqrt(2) for the Hermitian Pauli P_v."""
    n = len(v) // 2
    m = np.array([[1.0 + 0j]])
    for i in range(n):
        x, z = int(v[2 * i]), int(v[2 * i + 1])
        p = pauli_matrix_1(2, x, z)
        if x and z:
            p = 1j * p  # Hermitian Y
        m = np.kron(m, p)
    dim = 2 ** n
    return (np.eye(dim) + 1j * m) / np.sqrt(2)


def _find_transvections(u: np.ndarray, w: np.ndarray,
                        fix: np.ndarray | None = None) -> list[np.ndarray]:
    """Transvections mapping u to w, listed in application order.

    When `fix` is supplied it must anticommute with both u and w; the
    returned transvections then leave `fix` unchanged.
    """
    if np.array_equal(u, w):
        return []
    if _symp_form(u, w) == 1:
        return [u ^ w]
    if fix is None:
        # scan for a midpoint anticommuting with both
        width = len(u)
        for idx in range(1, 2 ** width):
            v = np.array([(idx >> b) & 1 for b in range(width)], dtype=np.int64)
            if _symp_form(u, v) == 1 and _symp_form(v, w) == 1:
                return [u ^ v, v ^ w]
        raise RuntimeError("no midpoint found")
    # fix itself is a valid midpoint, and both steps leave it invariant
    return [fix.copy(), u ^ fix ^ w]


def _random_symplectic_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform symplectic action on n qubits, as a dense unitary.

    Picks uniform images (f1, h) for the first hyperbolic pair, realizes
    them by at most four transvections, and recurses on the orthogonal
    complement (remaining qubits).
    """
    if n == 0:
        return np.array([[1.0 + 0j]])
    width = 2 * n
    e1 = np.zeros(width, dtype=np.int64)
    e1[0] = 1
    e2 = np.zeros(width, dtype=np.int64)
    e2[1] = 1

    while True:
        f1 = rng.integers(0, 2, size=width).astype(np.int64)
        if f1.any():
            break
    tv = _find_transvections(e1, f1)

    while True:
        h = rng.integers(0, 2, size=width).astype(np.int64)
        if _symp_form(f1, h) == 1:
            break
    u = e2.copy()
    for v in tv:
        if _symp_form(u, v) == 1:
            u = u ^ v
    tv = tv + _find_transvections(u, h, fix=f1)

    prod = np.eye(2 ** n, dtype=np.complex128)
    for v in tv:
        prod = _transvection_unitary(v) @ prod
    inner = _random_symplectic_unitary(n - 1, rng)
    return prod @ np.kron(np.eye(2), inner)


def sample_clifford(n: int, rng: np.random.Generator) -> CliffordElement:
    """Uniform random Clifford element modulo phase.

    n <= 2 draws from the exact enumeration; n = 3 uses the symplectic
    transvection construction followed by a uniform Pauli (experimental).
    """
    if n in (1, 2):
        table = enumerate_clifford(n)
        return table[int(rng.integers(len(table)))]
    if n != 3:
        raise ValueError("sampling supports n <= 3")
    u = _random_symplectic_unitary(n, rng)
    xz = rng.integers(0, 2, size=2 * n)
    p = SymbolicPauli(2, xz[0::2], xz[1::2])
    m = u @ pauli_matrix(p).entries
    shape = RegisterShape((2,) * n)
    return CliffordElement(n, UnitaryMatrix(shape, m, check_unitary=False),
                           None, key=conjugation_key(m, n))


# ------------------------------------------------------- group averaging

def all_pauli_matrices(q: int, m: int) -> np.ndarray:
    """Stack of all q^{2m} Pauli matrices Z^z X^x on m wires.

    Index order: (x digits, then z digits), wire 0 most significant
    within each part.
    """
    dim = q ** m
    count = q ** (2 * m)
    if count * dim * dim > 2 ** 28:
        raise ValueError("Pauli stack too large")
    out = np.zeros((count, dim, dim), dtype=np.complex128)
    shape = RegisterShape((q,) * (2 * m), dim_cap=2 ** 62)
    for idx in range(count):
        digits = shape.index_to_digits(idx)
        p = SymbolicPauli(q, digits[:m], digits[m:])
        out[idx] = pauli_matrix(p).entries
    return out


def _embed_stack(mats: np.ndarray, wires: Sequence[int],
                 shape: RegisterShape) -> np.ndarray:
    """Embed a stack of operators on `wires` into the full register."""
    n = shape.num_wires
    wires = tuple(wires)
    rest = [i for i in range(n) if i not in wires]
    rest_dim = 1
    for i in rest:
        rest_dim *= shape.dims[i]
    count = mats.shape[0]
    big = np.einsum("nij,pq->nipjq", mats,
                    np.eye(rest_dim)).reshape(count, shape.dim, shape.dim)
    order = wires + tuple(rest)
    idx = np.arange(shape.dim).reshape([shape.dims[i] for i in order])
    idx = np.transpose(idx, np.argsort(order)).reshape(-1)
    return big[:, idx[:, None], idx[None, :]]


_STACK_CACHE: dict[tuple, np.ndarray] = {}


def _embedded_group_stack(group: str, wires: tuple[int, ...],
                          shape: RegisterShape) -> np.ndarray:
    key = (group, wires, shape.dims)
    if key not in _STACK_CACHE:
        block_dims = [shape.dims[w] for w in wires]
        if group == "clifford":
            table = enumerate_clifford(len(wires))
            mats = np.stack([e.matrix.entries for e in table])
        else:
            mats = all_pauli_matrices(block_dims[0], len(wires))
        _STACK_CACHE[key] = np.ascontiguousarray(
            _embed_stack(mats, wires, shape))
    return _STACK_CACHE[key]


def group_average_channel(rho, attack: UnitaryMatrix, group: str,
                          wires: Sequence[int]):
    """Exact average of (g^dag (x) I) U (g (x) I) rho (..)^dag over a group.

    `group` is "clifford" (qubit wires, n <= 2) or "pauli" (any prime q).
    The attack unitary acts on the whole register of rho; g acts on the
    listed wires.  Returns a DensityMatrix.
    """
    from .qcore import DensityMatrix  # local import avoids cycle confusion

    shape = rho.shape
    block_dims = [shape.dims[w] for w in wires]
    if group == "clifford":
        if any(d != 2 for d in block_dims):
            raise ValueError("clifford averaging needs qubit wires")
        if len(wires) not in (1, 2):
            raise ValueError("clifford averaging supports 1 or 2 wires")
        count = 24 if len(wires) == 1 else 11520
    elif group == "pauli":
        q = block_dims[0]
        if any(d != q for d in block_dims):
            raise ValueError("pauli averaging needs equal wire dims")
        count = q ** (2 * len(wires))
    else:
        raise ValueError(f"unknown group {group!r}")

    if count * shape.dim ** 3 > _AVERAGE_FLOP_CAP:
        raise ValueError("group too large for exact averaging")

    g = _embedded_group_stack(group, tuple(wires), shape)
    u = attack.entries
    r = rho.entries
    out = np.zeros_like(r)
    chunk = max(1, int(2 ** 24 / (shape.dim ** 2)))
    for lo in range(0, count, chunk):
        gs = g[lo:lo + chunk]
        gdag = gs.conj().transpose(0, 2, 1)
        a = np.matmul(gdag, np.matmul(u, gs))
        b = np.matmul(np.matmul(a, r), a.conj().transpose(0, 2, 1))
        out += b.sum(axis=0)
    out /= count
    return DensityMatrix(shape, out, check_psd=False)


def group_conjugate_average(rho, group: str, wires: Sequence[int]):
    """(1/|G|) sum_g (g (x) I) rho (g (x) I)^dag over the listed wires.

    The mixing channel: with G the full Pauli or Clifford group this
    erases the block, leaving I/d (x) (reduced rest).
    """
    from .qcore import DensityMatrix

    shape = rho.shape
    g = _embedded_group_stack(group, tuple(wires), shape)
    count = g.shape[0]
    if count * shape.dim ** 3 > _AVERAGE_FLOP_CAP:
        raise ValueError("group too large for exact averaging")
    out = np.zeros_like(rho.entries)
    chunk = max(1, int(2 ** 24 / (shape.dim ** 2)))
    for lo in range(0, count, chunk):
        gs = g[lo:lo + chunk]
        b = np.matmul(np.matmul(gs, rho.entries), gs.conj().transpose(0, 2, 1))
        out += b.sum(axis=0)
    return DensityMatrix(shape, out / count, check_psd=False)


def pauli_decompose(u: np.ndarray, q: int, m: int, env_dim: int) -> np.ndarray:
    """Write U on (block of m q-dim wires) (x) (env) as sum_P P (x) U_P.

    Returns an array W of shape (q^m, q^m, env_dim, env_dim) where
    W[x_index, z_index] is the environment block paired with Z^z X^x.
    """
    db = q ** m
    if u.shape != (db * env_dim, db * env_dim):
        raise ValueError("attack dimension mismatch")
    v = u.reshape(db, env_dim, db, env_dim)
    grid = np.indices((q,) * m).reshape(m, -1)  # digit rows for 0..db-1
    rows = np.arange(db)
    # G[x, gamma] = env block at rows gamma, columns gamma - x of U
    gm = np.zeros((db, db, env_dim, env_dim), dtype=np.complex128)
    for xi in range(db):
        xdig = grid[:, xi][:, None]
        src = np.ravel_multi_index(tuple((grid - xdig) % q), (q,) * m)
        gm[xi] = v[rows, :, src, :]
    # DFT over gamma digits: U_{z,x} = (1/db) sum_gamma w^{-z.gamma} G[x,gamma]
    gshaped = gm.reshape((db,) + (q,) * m + (env_dim, env_dim))
    w = np.fft.fftn(gshaped, axes=tuple(range(1, m + 1)))
    return w.reshape(db, db, env_dim, env_dim) / db
