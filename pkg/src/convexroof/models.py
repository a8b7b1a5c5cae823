"""Benchmark density-matrix families.

All generators use hbar = k_B = 1 units, natural-log entropies by default,
and the qubit-major index convention (a, b) -> a * dim_b + b.  States are
emitted as low-rank spectral factorizations; the dephasing-environment family
builds its rank-<=2 factors analytically and never materializes the dense
density matrix, which is what keeps large environments tractable.
"""

import math

import numpy as np

from .errors import NotPSDError
from .monotones import gibbs_block_hamiltonian, gibbs_block_indices
from .roof import MixedState, entropy_of_spectrum, spectral_factorize


def bell_state(kind="psi_plus"):
    """Two-qubit Bell vector; kind in {phi_plus, phi_minus, psi_plus, psi_minus}."""
    s = 1.0 / math.sqrt(2.0)
    vectors = {
        "phi_plus": [s, 0.0, 0.0, s],
        "phi_minus": [s, 0.0, 0.0, -s],
        "psi_plus": [0.0, s, s, 0.0],
        "psi_minus": [0.0, s, -s, 0.0],
    }
    return np.array(vectors[kind], dtype=complex)


def make_sep1(log_base=math.e):
    """Equal mixture of the two Bell states |Psi+>, |Psi->.

    Classically correlated only: it equals (|01><01| + |10><10|) / 2.
    """
    psi_p = bell_state("psi_plus")
    psi_m = bell_state("psi_minus")
    rho = 0.5 * np.outer(psi_p, psi_p.conj()) + 0.5 * np.outer(psi_m, psi_m.conj())
    return spectral_factorize(rho, 2, 2, log_base=log_base)


def make_sep2(log_base=math.e):
    """Separable X state: |00><00| / 4 + |11><11| / 4 + |Psi+><Psi+| / 2."""
    psi_p = bell_state("psi_plus")
    rho = 0.5 * np.outer(psi_p, psi_p.conj())
    rho[0, 0] += 0.25
    rho[3, 3] += 0.25
    return spectral_factorize(rho, 2, 2, log_base=log_base)


def rho1_eigenvalues(b, x):
    """Nonzero eigenvalues (1 +- sqrt(4b^2 - 4b + 4|x|^2 + 1)) / 2."""
    disc = math.sqrt(4.0 * b * b - 4.0 * b + 4.0 * abs(x) ** 2 + 1.0)
    return (1.0 + disc) / 2.0, (1.0 - disc) / 2.0


def make_rho1(b, x, log_base=math.e):
    """Decohered Bell-like state confined to the {|01>, |10>} subspace.

    Returns ``(state, analytic_eof)``: for this family every decomposition
    stays inside the span of |01> and |10>, so the convex-roof entanglement
    equals the von Neumann entropy of the state itself.
    """
    x = complex(x)
    if not 0.0 <= b <= 1.0:
        raise NotPSDError(f"b must lie in [0, 1], got {b}")
    if abs(x) ** 2 > b * (1.0 - b) + 1e-12:
        raise NotPSDError(f"|x|^2 = {abs(x)**2:.6g} exceeds b(1-b) = {b*(1-b):.6g}")
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = b
    rho[1, 2] = x
    rho[2, 1] = x.conjugate()
    rho[2, 2] = 1.0 - b
    state = spectral_factorize(rho, 2, 2, log_base=log_base)
    analytic = entropy_of_spectrum(rho1_eigenvalues(b, x), log_base)
    return state, analytic


def make_rho2(c, omega, t, log_base=math.e):
    """Dephased |++> state driven by the |11><11| interaction.

    The coherence parameter c in [0, 1] fixes the spectrum (the evolution is
    unitary); c = 1 is pure, c = 0 is maximally mixed.  Entanglement of this
    family shows sudden death and rebirth for c < 1.
    """
    if not 0.0 <= c <= 1.0:
        raise NotPSDError(f"c must lie in [0, 1], got {c}")
    phase = np.exp(1j * omega * t)
    c2 = c * c
    rho = 0.25 * np.array(
        [
            [1.0, c, c, c2 * phase],
            [c, 1.0, c2, c * phase],
            [c, c2, 1.0, c * phase],
            [c2 * np.conj(phase), c * np.conj(phase), c * np.conj(phase), 1.0],
        ],
        dtype=complex,
    )
    return spectral_factorize(rho, 2, 2, log_base=log_base)


def qubit_env_revival_time(n_e):
    """First time at which every environment phase omega_k t is a multiple
    of 2 pi, i.e. lcm(1, ..., n_e)."""
    return float(math.lcm(*range(1, n_e + 1)))


def make_qubit_env(d, n_e, t, log_base=math.e):
    """Qubit coupled to n_e environment qubits by pure dephasing.

    The qubit starts in the partially dephased superposition with coherence
    d in [0, 1]; each environment qubit starts in |0> and evolves only in the
    qubit's |1> branch, picking up conjugate phases exp(+-i omega_k t) on its
    |+>, |-> components with omega_k = 2 pi / k.  The total state has rank
    <= 2 with eigenvalues (1 +- d) / 2 at all times, so the factors are built
    directly in the 2^(n_e + 1)-dimensional space.
    """
    if not 0.0 <= d <= 1.0:
        raise NotPSDError(f"d must lie in [0, 1], got {d}")
    if n_e < 1:
        raise ValueError(f"need at least one environment qubit, got {n_e}")
    dim_b = 2**n_e
    # |1>-branch environment vector: product of w^k(t)|0>
    chi = np.ones(1, dtype=complex)
    for k in range(1, n_e + 1):
        omega_k = 2.0 * math.pi / k
        single = np.array(
            [math.cos(omega_k * t), 1j * math.sin(omega_k * t)], dtype=complex
        )
        chi = np.kron(chi, single)
    zero_env = np.zeros(dim_b, dtype=complex)
    zero_env[0] = 1.0
    s = 1.0 / math.sqrt(2.0)
    plus_branch = np.concatenate([s * zero_env, s * chi])
    minus_branch = np.concatenate([s * zero_env, -s * chi])
    weights = [(1.0 + d) / 2.0, (1.0 - d) / 2.0]
    columns = [
        math.sqrt(w) * vec
        for w, vec in zip(weights, (plus_branch, minus_branch))
        if w > 0.0
    ]
    factors = np.stack(columns, axis=1)
    return MixedState(dim_a=2, dim_b=dim_b, factors=factors, log_base=log_base)


def make_gibbs(spin, coupling, splitting, temperature, log_base=math.e, rank_tol=1e-12):
    """Thermal state of the block-diagonal qubit-environment Hamiltonian.

    Block m couples the qubit to the environment pair {|m>, |m_perp>} mapped
    to environment indices 2(m + K) and 2(m + K) + 1; the Hamiltonian is
    exponentiated block by block through its eigendecomposition and the
    result normalized by the global trace.  Returns ``(state, hamiltonian)``.
    """
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    ms = gibbs_block_indices(spin)
    dim_b = 2 * len(ms)
    dim = 2 * dim_b
    hamiltonian = np.zeros((dim, dim), dtype=complex)
    gibbs = np.zeros((dim, dim), dtype=complex)
    systems = []
    for m in ms:
        block = gibbs_block_hamiltonian(m, spin, coupling, splitting)
        env = int(round(2 * (m + spin)))
        idx = np.array([env, env + 1, dim_b + env, dim_b + env + 1])
        hamiltonian[np.ix_(idx, idx)] = block
        systems.append((idx, *np.linalg.eigh(block)))
    e_min = min(w.min() for _, w, _ in systems)
    for idx, w, v in systems:
        boltzmann = np.exp(-(w - e_min) / temperature)
        gibbs[np.ix_(idx, idx)] = (v * boltzmann) @ v.conj().T
    gibbs /= np.trace(gibbs).real
    state = spectral_factorize(gibbs, 2, dim_b, rank_tol=rank_tol, log_base=log_base)
    return state, hamiltonian
