"""Linear agent dynamics, gain screening, and fixed-step state propagation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import LaplacianSpectrum

# A mode counts as stable only if its largest real part clears this margin.
HURWITZ_TOL = 1e-9

# Cap on the internal integration substep; propagate splits longer intervals.
SUBSTEP_MAX = 0.01


@dataclass(frozen=True, eq=False)
class LinearDynamics:
    """Identical per-agent dynamics dx/dt = A x + B u."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"drift matrix must be square, got shape {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise ValueError(
                f"input matrix has {b.shape[0]} rows, expected {a.shape[0]}"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    @property
    def input_dim(self) -> int:
        return self.b.shape[1]

    @classmethod
    def single_integrator(cls) -> "LinearDynamics":
        """Scalar dx/dt = u, the workhorse configuration."""
        return cls(np.zeros((1, 1)), np.ones((1, 1)))


@dataclass(frozen=True, eq=False)
class GainMatrix:
    """Feedback gain applied to the sampled neighborhood error."""

    k: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k", np.atleast_2d(np.asarray(self.k, dtype=float)))

    @classmethod
    def scalar(cls, value: float) -> "GainMatrix":
        return cls(np.array([[float(value)]]))


@dataclass(frozen=True)
class ModeStability:
    """Stability of A - lambda*B*K for one Laplacian eigenvalue."""

    eigenvalue: float
    max_real_part: float
    hurwitz: bool


@dataclass(frozen=True)
class GainReport:
    modes: tuple
    tolerance: float = HURWITZ_TOL

    @property
    def all_hurwitz(self) -> bool:
        return all(m.hurwitz for m in self.modes)


def verify_gain(
    dyn: LinearDynamics,
    gain: GainMatrix,
    spectrum: LaplacianSpectrum,
    tol: float = HURWITZ_TOL,
) -> GainReport:
    """Check A - lambda*B*K against every nonzero Laplacian eigenvalue.

    The spectrum must come from a connected graph (exactly one zero
    eigenvalue). Each nonzero eigenvalue yields the max real part of the
    closed-loop mode matrix and a Hurwitz flag.
    """
    if gain.k.shape != (dyn.input_dim, dyn.state_dim):
        raise ValueError(
            f"gain shape {gain.k.shape} does not match dynamics "
            f"({dyn.input_dim} x {dyn.state_dim} expected)"
        )
    if spectrum.multiplicity_of_zero != 1:
        raise ValueError(
            "gain verification requires a connected-graph spectrum "
            f"(zero multiplicity {spectrum.multiplicity_of_zero})"
        )
    bk = dyn.b @ gain.k
    modes = []
    for lam in spectrum.nonzero:
        closed = dyn.a - lam * bk
        max_real = float(np.linalg.eigvals(closed).real.max())
        modes.append(ModeStability(float(lam), max_real, max_real < -tol))
    return GainReport(tuple(modes), tol)


def rk4_step(a_t: np.ndarray, b_t: np.ndarray, x: np.ndarray, u: np.ndarray,
             dt: float) -> np.ndarray:
    """Raw classical 4th-order step for dx/dt = x A' + u B' with u held constant.

    No validation; callers pass pre-transposed matrices and finite values.
    """
    drive = u @ b_t  # constant over the step (zero-order hold)
    k1 = x @ a_t + drive
    k2 = (x + (0.5 * dt) * k1) @ a_t + drive
    k3 = (x + (0.5 * dt) * k2) @ a_t + drive
    k4 = (x + dt * k3) @ a_t + drive
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integration_substeps(dt: float, h_max: float = SUBSTEP_MAX) -> tuple:
    """(count, length) of the uniform substeps covering an interval of dt."""
    pieces = max(1, int(np.ceil(dt / h_max - 1e-12)))
    return pieces, dt / pieces


def propagate(dyn: LinearDynamics, x, u, dt: float) -> np.ndarray:
    """Advance dx/dt = A x + B u over [t, t+dt] with u held constant.

    Classical 4th-order fixed-step rule on uniform internal substeps of at
    most SUBSTEP_MAX; exact for A = 0. Accepts a single state vector or a
    batch with states along the last axis.
    """
    if dt <= 0:
        raise ValueError(f"step size must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape[-1] != dyn.state_dim:
        raise ValueError(f"state has trailing dimension {x.shape[-1]}, expected {dyn.state_dim}")
    if u.shape[-1] != dyn.input_dim:
        raise ValueError(f"input has trailing dimension {u.shape[-1]}, expected {dyn.input_dim}")
    if not np.isfinite(x).all() or not np.isfinite(u).all():
        raise ValueError("non-finite state or input")
    a_t, b_t = dyn.a.T, dyn.b.T
    pieces, h = integration_substeps(dt)
    for _ in range(pieces):
        x = rk4_step(a_t, b_t, x, u, h)
    return x
