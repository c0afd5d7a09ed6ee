"""Beam parameters, spatial discretization, and generator assembly.

The coupled first-order system for (phi, phi_t, psi, psi_t, eta) is
discretized on a staggered spatial grid: the transverse displacement phi
lives at cell midpoints, the rotation psi and its history eta at interior
nodes. The staggering keeps the shear-coupling difference operators
full-rank up to the grid cutoff (a collocated centered difference loses the
coupling at the highest resolved frequency, which fakes undamped modes).

The discrete energy is assembled from the same difference operators as the
generator, so the conservative part of A_h is exactly skew in the weighted
inner product and the memory part is exactly dissipative: for every state z,

    z^T W_H A_h z = (Abel-summed transport term) <= 0,

with the transport term reproducing the quadrature of the kernel-derivative
dissipation law up to O(ds).

State layout (length N = 4n + 2 + nJ):

    [phi (n+1) | phi_dot (n+1) | psi (n) | psi_dot (n) | eta(:, 0) ... eta(:, J-1)]
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .history import HistoryGrid, _grad_sq
from .kernels import ConstructionError, Kernel, moments

__all__ = [
    "BeamParams",
    "SpatialGrid",
    "State",
    "Generator",
    "assemble_generator",
    "energy",
    "energy_split",
    "dissipation_form",
    "write_generator_coo",
]

DIM_CAP = 50_000


@dataclass(frozen=True)
class BeamParams:
    """Physical constants: densities rho1, rho2, moduli kappa, b, length."""

    rho1: float = 1.0
    rho2: float = 1.0
    kappa: float = 1.0
    b: float = 1.0
    length: float = 1.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "kappa", "b", "length"):
            if getattr(self, name) <= 0:
                raise ConstructionError(f"beam parameter {name} must be positive")

    def equal_speed(self) -> bool:
        """Whether both hyperbolic equations share one propagation speed."""
        r1, r2 = self.rho1 / self.kappa, self.rho2 / self.b
        return abs(r1 - r2) <= 1e-12 * max(r1, r2)

    def as_dict(self) -> dict:
        return {"rho1": self.rho1, "rho2": self.rho2, "kappa": self.kappa,
                "b": self.b, "length": self.length}


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [0, length] with n interior nodes, spacing h."""

    n: int
    length: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ConstructionError("spatial grid needs n >= 2 interior nodes")

    @property
    def h(self) -> float:
        return self.length / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates (Dirichlet values at 0, length implied)."""
        return self.h * np.arange(1, self.n + 1)

    @property
    def midpoints(self) -> np.ndarray:
        """Cell midpoints carrying the transverse displacement."""
        return self.h * (np.arange(1, self.n + 2) - 0.5)


@dataclass
class State:
    """Discrete phase-space vector (phi, phi_dot, psi, psi_dot, eta)."""

    phi: np.ndarray       # (n+1,)  midpoints
    phi_dot: np.ndarray   # (n+1,)
    psi: np.ndarray       # (n,)    interior nodes
    psi_dot: np.ndarray   # (n,)
    eta: np.ndarray       # (n, J)

    @staticmethod
    def zero(n: int, J: int) -> "State":
        return State(np.zeros(n + 1), np.zeros(n + 1), np.zeros(n),
                     np.zeros(n), np.zeros((n, J)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.phi, self.phi_dot, self.psi, self.psi_dot,
                               self.eta.T.ravel()])

    @staticmethod
    def from_vector(z: np.ndarray, n: int, J: int) -> "State":
        ne = n + 1
        if z.shape != (4 * n + 2 + n * J,):
            raise ValueError("state vector has wrong length")
        return State(
            phi=z[:ne].copy(),
            phi_dot=z[ne:2 * ne].copy(),
            psi=z[2 * ne:2 * ne + n].copy(),
            psi_dot=z[2 * ne + n:2 * ne + 2 * n].copy(),
            eta=z[2 * ne + 2 * n:].reshape((J, n)).T.copy(),
        )


@dataclass
class Generator:
    """Assembled generator A_h plus the weight matrix of the energy norm."""

    A: sp.csr_matrix
    W: sp.csr_matrix
    params: BeamParams
    kernel: Kernel | None
    sgrid: SpatialGrid
    hgrid: HistoryGrid | None
    m: float
    a: float
    _eigenvalues: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.sgrid.n

    @property
    def J(self) -> int:
        return 0 if self.hgrid is None else self.hgrid.J


def _node_laplacian(n: int, h: float) -> sp.csr_matrix:
    off = np.ones(n - 1)
    return (sp.diags([off, -2.0 * np.ones(n), off], [-1, 0, 1]) / h**2).tocsr()


def _strain_maps(n: int, h: float):
    """Maps from (phi, psi) to the extended strain, and quadrature weights.

    The strain phi_x + psi is sampled at the n interior nodes plus the two
    walls, where the Dirichlet values phi = 0 and psi = 0 turn the wall
    strain into +-2 phi_end / h over a half cell.
    """
    Bphi = sp.lil_matrix((n + 2, n + 1))
    Bphi[0, 0] = 2.0 / h
    for i in range(1, n + 1):
        Bphi[i, i] = 1.0 / h
        Bphi[i, i - 1] = -1.0 / h
    Bphi[n + 1, n] = -2.0 / h
    Bpsi = sp.lil_matrix((n + 2, n))
    for i in range(1, n + 1):
        Bpsi[i, i - 1] = 1.0
    om = np.full(n + 2, h)
    om[0] = om[-1] = h / 2
    return Bphi.tocsr(), Bpsi.tocsr(), sp.diags(om).tocsr()


def assemble_generator(params: BeamParams, kernel: Kernel | None,
                       sgrid: SpatialGrid, hgrid: HistoryGrid | None) -> Generator:
    """Build A_h and W_H. ``kernel=None`` gives the conservative beam (a = b)."""
    n, h = sgrid.n, sgrid.h
    if kernel is None:
        m, a = 0.0, params.b
        J = 0
        w = np.zeros(0)
    else:
        if hgrid is None:
            raise ValueError("a kernel needs a history grid")
        if abs(kernel.b - params.b) > 1e-12 * params.b:
            raise ConstructionError(
                f"kernel modulus b = {kernel.b} disagrees with beam b = {params.b}")
        m, a = moments(kernel)
        if a <= 0:
            raise ConstructionError(
                f"residual modulus a = b - m = {a:.6g} must be positive")
        J = hgrid.J
        w = hgrid.weights(kernel)
    N = 4 * n + 2 + n * J
    if N > DIM_CAP:
        raise MemoryError(
            f"generator dimension {N} exceeds the configured cap {DIM_CAP}")

    rho1, rho2, kappa = params.rho1, params.rho2, params.kappa
    Ln = _node_laplacian(n, h)
    Ghat = (-Ln).tocsr()                      # node gradient-energy operator
    Bphi, Bpsi, Om = _strain_maps(n, h)
    K_pp = (Bphi.T @ Om @ Bphi).tocsr()
    K_ps = (Bphi.T @ Om @ Bpsi).tocsr()
    K_ss = (Bpsi.T @ Om @ Bpsi).tocsr()       # = h * I on interior nodes

    ne = n + 1
    In, Ie = sp.identity(n, format="csr"), sp.identity(ne, format="csr")
    Znn, Zne = sp.csr_matrix((n, n)), sp.csr_matrix((n, ne))
    Zen, Zee = sp.csr_matrix((ne, n)), sp.csr_matrix((ne, ne))
    ZeJ, ZnJ = sp.csr_matrix((ne, n * J)), sp.csr_matrix((n, n * J))

    rows = [
        sp.hstack([Zee, Ie, Zen, Zen, ZeJ]),
        sp.hstack([-(kappa / (rho1 * h)) * K_pp, Zee,
                   -(kappa / (rho1 * h)) * K_ps, Zen, ZeJ]),
        sp.hstack([Zne, Zne, Znn, In, ZnJ]),
    ]
    if J:
        mem = sp.hstack([(w[j] / rho2) * Ln for j in range(J)])
        rows.append(sp.hstack([-(kappa / (rho2 * h)) * K_ps.T, Zne,
                               (a / rho2) * Ln - (kappa / (rho2 * h)) * K_ss,
                               Znn, mem]))
        ds = hgrid.widths
        upwind = (sp.diags([-1.0 / ds], [0], shape=(J, J))
                  + sp.diags([1.0 / ds[1:]], [-1], shape=(J, J)))
        rows.append(sp.hstack([
            sp.csr_matrix((n * J, ne)), sp.csr_matrix((n * J, ne)),
            sp.csr_matrix((n * J, n)), sp.kron(np.ones((J, 1)), In),
            sp.kron(upwind, In)]))
    else:
        rows.append(sp.hstack([-(kappa / (rho2 * h)) * K_ps.T, Zne,
                               (a / rho2) * Ln - (kappa / (rho2 * h)) * K_ss,
                               Znn, ZnJ]))
    A = sp.vstack(rows).tocsr()

    blocks = [
        [kappa * K_pp, None, kappa * K_ps, None],
        [None, rho1 * h * Ie, None, None],
        [kappa * K_ps.T, None, kappa * K_ss + a * h * Ghat, None],
        [None, None, None, rho2 * h * In],
    ]
    Whead = sp.bmat(blocks)
    if J:
        W = sp.block_diag([Whead] + [wj * h * Ghat for wj in w]).tocsr()
    else:
        W = Whead.tocsr()
    return Generator(A=A, W=W, params=params, kernel=kernel, sgrid=sgrid,
                     hgrid=hgrid, m=m, a=a)


def energy(z: State | np.ndarray, gen: Generator) -> float:
    """Total energy 1/2 z^T W_H z of a state."""
    v = z.to_vector() if isinstance(z, State) else np.asarray(z)
    if v.shape != (gen.dim,):
        raise ValueError("state does not match generator dimensions")
    return 0.5 * float(v @ (gen.W @ v))


def energy_split(z: State, gen: Generator) -> dict[str, float]:
    """Energy by term: shear, phi velocity, bending, psi velocity, memory."""
    p, h = gen.params, gen.sgrid.h
    n = gen.n
    Bphi, Bpsi, Om = _strain_maps(n, h)
    eps = Bphi @ z.phi + Bpsi @ z.psi
    om = Om.diagonal()
    shear = 0.5 * p.kappa * float(np.sum(om * eps * eps))
    kin_phi = 0.5 * p.rho1 * h * float(z.phi_dot @ z.phi_dot)
    bend = 0.5 * gen.a * float(_grad_sq(z.psi[:, None], h)[0])
    kin_psi = 0.5 * p.rho2 * h * float(z.psi_dot @ z.psi_dot)
    if gen.kernel is not None:
        wq = gen.hgrid.weights(gen.kernel)
        mem = 0.5 * float(np.sum(wq * _grad_sq(z.eta, h)))
    else:
        mem = 0.0
    return {"shear": shear, "kinetic_phi": kin_phi, "bending": bend,
            "kinetic_psi": kin_psi, "memory": mem,
            "total": shear + kin_phi + bend + kin_psi + mem}


def dissipation_form(z: State, kernel: Kernel, hgrid: HistoryGrid,
                     sgrid: SpatialGrid) -> float:
    """Kernel-derivative dissipation quadrature (nonpositive).

    1/2 sum_j mu'(s_j) ds_j ||D_x eta(., s_j)||^2 -- the discrete form of the
    energy balance; it agrees with z^T W_H A_h z up to O(ds) for smooth
    history fields vanishing at s = 0.
    """
    g = _grad_sq(z.eta, sgrid.h)
    return 0.5 * float(np.sum(kernel.dmu(hgrid.nodes) * hgrid.widths * g))


def write_generator_coo(path, gen: Generator) -> None:
    """Export A_h as text triples (row, col, value) for external checks."""
    coo = gen.A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as f:
        f.write("row,col,value\n")
        for k in order:
            f.write(f"{int(coo.row[k])},{int(coo.col[k])},{float(coo.data[k])!r}\n")
