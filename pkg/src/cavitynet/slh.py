"""Linear SLH triples and their composition rules.

A component with ``n`` ports and ``m`` internal bosonic modes is stored as

* ``S``: an ``n x n`` scattering matrix,
* ``L = C a + l``: coupling operators, ``C`` is ``n x m`` and ``l`` is a
  constant (coherent drive) vector of length ``n``,
* ``H = a^dag M a + (h . a^dag + h.c.)`` with Hermitian ``M``.

Constant energy offsets in ``H`` are dropped; they do not affect dynamics.

Modes are identified by label. When two operands mention the same label they
refer to one physical mode, which is how a cavity coupled to both the left-
and right-propagating waveguide fields is represented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (InvalidParameterError, ModeConflictError,
                     PortMismatchError, SingularLoopError)

HERMITIAN_TOL = 1e-10
SINGULAR_LOOP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LinearSLH:
    """An open linear quantum component.

    ``mode_detunings`` records, per mode, the bare detuning declared by the
    component that owns the mode Hamiltonian (``None`` when the component only
    couples to the mode). It is used to detect double counting on merges.
    """

    scattering: np.ndarray
    coupling: np.ndarray
    coupling_offset: np.ndarray
    hamiltonian_quadratic: np.ndarray
    hamiltonian_linear: np.ndarray
    mode_labels: tuple = ()
    mode_detunings: tuple = field(default=())

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.scattering, dtype=complex))
        n = S.shape[0]
        m = len(self.mode_labels)
        C = np.asarray(self.coupling, dtype=complex).reshape(n, m)
        l0 = np.asarray(self.coupling_offset, dtype=complex).reshape(n)
        M = np.asarray(self.hamiltonian_quadratic, dtype=complex).reshape(m, m)
        h = np.asarray(self.hamiltonian_linear, dtype=complex).reshape(m)
        if S.shape != (n, n):
            raise InvalidParameterError(f"scattering must be square, got {S.shape}")
        if len(set(self.mode_labels)) != m:
            raise ModeConflictError(f"duplicate mode labels {self.mode_labels}")
        if m and np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(M))):
            raise InvalidParameterError("hamiltonian_quadratic is not Hermitian")
        detunings = tuple(self.mode_detunings) or (None,) * m
        if len(detunings) != m:
            raise InvalidParameterError("mode_detunings must match mode_labels")
        for arr in (S, C, l0, M, h):
            arr.setflags(write=False)
        object.__setattr__(self, "scattering", S)
        object.__setattr__(self, "coupling", C)
        object.__setattr__(self, "coupling_offset", l0)
        object.__setattr__(self, "hamiltonian_quadratic", M)
        object.__setattr__(self, "hamiltonian_linear", h)
        object.__setattr__(self, "mode_labels", tuple(self.mode_labels))
        object.__setattr__(self, "mode_detunings", detunings)

    @property
    def n_ports(self) -> int:
        return self.scattering.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.mode_labels)

    def is_unitary(self, tol: float = 1e-10) -> bool:
        S = self.scattering
        return bool(np.allclose(S.conj().T @ S, np.eye(self.n_ports), rtol=0, atol=tol))

    def reorder(self, labels: Sequence[str]) -> "LinearSLH":
        """Return the same triple with modes permuted into ``labels`` order."""
        idx = [self.mode_labels.index(lab) for lab in labels]
        if len(idx) != self.n_modes:
            raise ModeConflictError("reorder must list every mode exactly once")
        return LinearSLH(self.scattering, self.coupling[:, idx], self.coupling_offset,
                         self.hamiltonian_quadratic[np.ix_(idx, idx)],
                         self.hamiltonian_linear[idx], tuple(labels),
                         tuple(self.mode_detunings[i] for i in idx))

    def drift_matrix(self) -> np.ndarray:
        """Matrix ``A`` of ``d<a>/dt = A <a> + b`` (see :meth:`drive_vector`)."""
        C = self.coupling
        return -1j * self.hamiltonian_quadratic - 0.5 * C.conj().T @ C

    def drive_vector(self) -> np.ndarray:
        """Constant term ``b`` of the mean-field equations of motion."""
        return -1j * self.hamiltonian_linear - 0.5 * self.coupling.conj().T @ self.coupling_offset

    def allclose(self, other: "LinearSLH", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        if self.n_ports != other.n_ports or set(self.mode_labels) != set(other.mode_labels):
            return False
        o = other.reorder(self.mode_labels)
        pairs = [(self.scattering, o.scattering), (self.coupling, o.coupling),
                 (self.coupling_offset, o.coupling_offset),
                 (self.hamiltonian_quadratic, o.hamiltonian_quadratic),
                 (self.hamiltonian_linear, o.hamiltonian_linear)]
        return all(np.allclose(x, y, rtol=rtol, atol=atol) for x, y in pairs)

    def __lshift__(self, other: "LinearSLH") -> "LinearSLH":
        return series(self, other)

    def __add__(self, other: "LinearSLH") -> "LinearSLH":
        return concatenate(self, other)

    def __repr__(self):
        return (f"LinearSLH(n_ports={self.n_ports}, modes={list(self.mode_labels)}, "
                f"S={self.scattering.tolist()})")


def identity(n_ports: int = 1) -> LinearSLH:
    return LinearSLH(np.eye(n_ports), np.zeros((n_ports, 0)), np.zeros(n_ports),
                     np.zeros((0, 0)), np.zeros(0))


def make_phase(phi: float) -> LinearSLH:
    """Single-port phase shifter ``(e^{i phi}, 0, 0)``."""
    if not np.isfinite(phi):
        raise InvalidParameterError(f"phase must be finite, got {phi!r}")
    return LinearSLH(np.array([[np.exp(1j * phi)]]), np.zeros((1, 0)), np.zeros(1),
                     np.zeros((0, 0)), np.zeros(0))


def make_cavity_port(kappa_e: float, detuning: float, direction: str,
                     mode_label: str) -> LinearSLH:
    """A cavity side-coupled to one propagation direction of the bus.

    The cavity couples with amplitude ``sqrt(kappa_e / 2)`` to each direction.
    Only the ``"right"`` port carries the ``detuning * a^dag a`` term so the
    cavity Hamiltonian is counted once when both ports are composed.
    """
    if not np.isfinite(kappa_e) or kappa_e < 0:
        raise InvalidParameterError(f"kappa_e must be >= 0, got {kappa_e!r}")
    if direction not in ("right", "left"):
        raise InvalidParameterError(f"direction must be 'right' or 'left', got {direction!r}")
    owns = direction == "right"
    return LinearSLH(np.eye(1), np.array([[np.sqrt(kappa_e / 2)]]), np.zeros(1),
                     np.array([[detuning if owns else 0.0]]), np.zeros(1),
                     (mode_label,), (float(detuning) if owns else None,))


def make_probe(alpha: complex) -> LinearSLH:
    """Coherent drive ``(1, alpha, 0)``."""
    return LinearSLH(np.eye(1), np.zeros((1, 0)), np.array([alpha]),
                     np.zeros((0, 0)), np.zeros(0))


def _merged_modes(a: LinearSLH, b: LinearSLH):
    labels = list(a.mode_labels)
    detunings = list(a.mode_detunings)
    for lab, det in zip(b.mode_labels, b.mode_detunings):
        if lab in labels:
            i = labels.index(lab)
            if det is not None and detunings[i] is not None:
                raise ModeConflictError(
                    f"mode {lab!r} has its Hamiltonian declared twice "
                    f"({detunings[i]} and {det})")
            if det is not None:
                detunings[i] = det
        else:
            labels.append(lab)
            detunings.append(det)
    return tuple(labels), tuple(detunings)


def _embed(g: LinearSLH, labels: tuple):
    """Coupling, H matrix and H vector of ``g`` on the merged mode list."""
    m = len(labels)
    idx = [labels.index(lab) for lab in g.mode_labels]
    C = np.zeros((g.n_ports, m), dtype=complex)
    C[:, idx] = g.coupling
    M = np.zeros((m, m), dtype=complex)
    M[np.ix_(idx, idx)] = g.hamiltonian_quadratic
    h = np.zeros(m, dtype=complex)
    h[idx] = g.hamiltonian_linear
    return C, M, h


def _im_bilinear(P, p, Q, q):
    """Quadratic and linear parts of ``Im[(P a + p)^dag (Q a + q)]``.

    ``Im(X) = (X - X^dag) / 2i``; the constant part is discarded.
    """
    M = (P.conj().T @ Q - Q.conj().T @ P) / 2j
    h = (P.conj().T @ q - Q.conj().T @ p) / 2j
    return M, h


def series(downstream: LinearSLH, upstream: LinearSLH) -> LinearSLH:
    """Cascade ``downstream <| upstream``: upstream outputs feed downstream inputs.

    ``S = S2 S1``, ``L = L2 + S2 L1``, ``H = H1 + H2 + Im(L2^dag S2 L1)``.
    """
    g2, g1 = downstream, upstream
    if g1.n_ports != g2.n_ports:
        raise PortMismatchError(
            f"series needs equal port counts, got {g2.n_ports} and {g1.n_ports}")
    labels, detunings = _merged_modes(g1, g2)
    C1, M1, h1 = _embed(g1, labels)
    C2, M2, h2 = _embed(g2, labels)
    S2 = g2.scattering
    SC1 = S2 @ C1
    Sl1 = S2 @ g1.coupling_offset
    dM, dh = _im_bilinear(C2, g2.coupling_offset, SC1, Sl1)
    return LinearSLH(S2 @ g1.scattering, C2 + SC1, g2.coupling_offset + Sl1,
                     M1 + M2 + dM, h1 + h2 + dh, labels, detunings)


def concatenate(a: LinearSLH, b: LinearSLH) -> LinearSLH:
    """Parallel combination ``a [+] b``: ports of ``a`` first, then ``b``."""
    labels, detunings = _merged_modes(a, b)
    Ca, Ma, ha = _embed(a, labels)
    Cb, Mb, hb = _embed(b, labels)
    na, nb = a.n_ports, b.n_ports
    S = np.zeros((na + nb, na + nb), dtype=complex)
    S[:na, :na] = a.scattering
    S[na:, na:] = b.scattering
    return LinearSLH(S, np.vstack([Ca, Cb]),
                     np.concatenate([a.coupling_offset, b.coupling_offset]),
                     Ma + Mb, ha + hb, labels, detunings)


def feedback(g: LinearSLH, out_port: int, in_port: int) -> LinearSLH:
    """Connect output ``out_port`` back into input ``in_port``.

    With ``k = out_port``, ``j = in_port`` and ``c = 1 / (1 - S[k, j])``::

        S' = S[~k, ~j] + S[~k, j] c S[k, ~j]
        L' = L[~k] + S[~k, j] c L[k]
        H' = H + Im( sum_i L_i^dag S[i, j] c L[k] )
    """
    n = g.n_ports
    k, j = out_port, in_port
    if not (0 <= k < n and 0 <= j < n):
        raise PortMismatchError(f"ports ({k}, {j}) out of range for {n}-port network")
    S = g.scattering
    denom = 1.0 - S[k, j]
    if abs(denom) <= SINGULAR_LOOP_TOL:
        raise SingularLoopError(f"1 - S[{k}, {j}] = {denom} is singular")
    c = 1.0 / denom
    rows = [i for i in range(n) if i != k]
    cols = [i for i in range(n) if i != j]
    C, l0 = g.coupling, g.coupling_offset
    S_new = S[np.ix_(rows, cols)] + c * np.outer(S[rows, j], S[k, cols])
    C_new = C[rows] + c * np.outer(S[rows, j], C[k])
    l_new = l0[rows] + c * S[rows, j] * l0[k]
    w = c * S[:, j]
    dM, dh = _im_bilinear(C, l0, np.outer(w, C[k]), w * l0[k])
    return LinearSLH(S_new, C_new, l_new, g.hamiltonian_quadratic + dM,
                     g.hamiltonian_linear + dh, g.mode_labels, g.mode_detunings)


def two_cavity_network(kappa_e1: float, kappa_e2: float, delta1: float, delta2: float,
                       phi1: float, phi2: float, alpha: complex = 0.0) -> LinearSLH:
    """Mirror-terminated two-cavity bus, probed through the open end.

    Right-propagating chain ``phi2 <| c2 <| phi1 <| c1`` and left-propagating
    chain ``c1 <| phi1 <| c2 <| phi2`` are concatenated, the right-going output
    is looped into the left-going input (the mirror), and the probe is
    cascaded in front. Modes are labelled ``"a1"`` and ``"a2"``.
    """
    right = (make_phase(phi2) << make_cavity_port(kappa_e2, delta2, "right", "a2")
             << make_phase(phi1) << make_cavity_port(kappa_e1, delta1, "right", "a1"))
    left = (make_cavity_port(kappa_e1, delta1, "left", "a1") << make_phase(phi1)
            << make_cavity_port(kappa_e2, delta2, "left", "a2") << make_phase(phi2))
    closed = feedback(right + left, 0, 1)
    return (closed << make_probe(alpha)).reorder(("a1", "a2"))
