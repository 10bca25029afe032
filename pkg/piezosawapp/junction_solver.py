"""
Equilibrium charge profile at a metal / undoped-semiconductor interface

Solves the 1D Poisson-Boltzmann equation

    d²phi/dx² = (q / eps) (n_e - n_h),  n_e = n_i exp(phi / V_T),  n_h = n_i exp(-phi / V_T)

with phi referenced to the intrinsic level deep in the bulk. The surface
potential is set by the work-function difference plus the back-contact bias,
optionally through an oxide treated as a series capacitor; the back boundary
is charge neutral (dphi/dx = 0).

The discretization is a finite-volume scheme on a geometrically graded mesh,
so summing the cell balances reproduces Gauss's law exactly on the discrete
profile. Newton's method with the analytic tridiagonal Jacobian and
logarithmic step damping solves the nonlinear system.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Sequence

import numpy as np
from scipy import constants, integrate, linalg, optimize

from .models import ModelValidationError

logger = logging.getLogger(__name__)

SIO2_RELATIVE_PERMITTIVITY = 3.9
# Boltzmann statistics stop being accurate beyond roughly this band bending (V)
BOLTZMANN_VALIDITY_LIMIT = 0.4
# |phi(L)| / |phi_s| above which the domain is too short for neutrality
BACK_BOUNDARY_TOLERANCE = 1e-3
MAX_SCALED_POTENTIAL = 600.0
MAX_BRACKET_EXPANSIONS = 200


class JunctionSolverError(Exception):
    """The junction solver could not produce a valid profile"""
    pass


@dataclass(frozen=True)
class JunctionSpec:
    """
    Junction description and numerical settings

    Energies in eV, lengths in m. bias_v is applied to the back contact
    relative to the metal; oxide_eot = 0 means direct metal contact.
    """
    metal_work_function: float = 4.28
    semiconductor_electron_affinity: float = 4.05
    band_gap: float = 1.12
    intrinsic_density: float = 1.0e16
    relative_permittivity: float = 11.7
    temperature: float = 300.0
    domain_length: float = 300e-6
    bias_v: float = 0.0
    oxide_eot: float = 0.0
    h_min: float = 1e-10
    n_nodes: int = 600
    max_iterations: int = 200
    tolerance: float = 1e-12

    def __post_init__(self):
        positive = ('metal_work_function', 'semiconductor_electron_affinity', 'band_gap',
                    'intrinsic_density', 'relative_permittivity', 'temperature',
                    'domain_length', 'h_min', 'tolerance')
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ModelValidationError(f"{name} must be > 0, got {value}")
        if not math.isfinite(self.bias_v):
            raise ModelValidationError(f"bias_v must be finite, got {self.bias_v}")
        if not (math.isfinite(self.oxide_eot) and self.oxide_eot >= 0):
            raise ModelValidationError(f"oxide_eot must be >= 0, got {self.oxide_eot}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise ModelValidationError(f"n_nodes must be an integer >= 3, got {self.n_nodes}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ModelValidationError(f"max_iterations must be an integer >= 1, got {self.max_iterations}")

    @property
    def permittivity(self) -> float:
        return self.relative_permittivity * constants.epsilon_0

    @property
    def semiconductor_work_function(self) -> float:
        """chi + E_g / 2: the Fermi level of an undoped semiconductor sits at midgap"""
        return self.semiconductor_electron_affinity + 0.5 * self.band_gap

    @property
    def oxide_capacitance(self) -> float:
        """C_ox per unit area in F/m², inf without an oxide"""
        if self.oxide_eot == 0:
            return math.inf
        return SIO2_RELATIVE_PERMITTIVITY * constants.epsilon_0 / self.oxide_eot


@dataclass(frozen=True, eq=False)
class JunctionProfile:
    """
    Converged potential and carrier densities

    Attributes:
        x: Depth grid in m, x[0] = 0 at the interface
        phi: Electrostatic potential in V
        n_e: Electron density in m⁻³
        n_h: Hole density in m⁻³
        surface_field: E = -dphi/dx at x = 0 in V/m
        permittivity: Semiconductor permittivity in F/m
        bias_v: Back-contact bias the profile was solved for
        iterations: Newton iterations used
    """
    x: np.ndarray
    phi: np.ndarray
    n_e: np.ndarray
    n_h: np.ndarray
    surface_field: float
    permittivity: float
    bias_v: float = 0.0
    iterations: int = 0

    @property
    def surface_potential(self) -> float:
        return float(self.phi[0])

    @property
    def interface_excess_density(self) -> float:
        """n_e(0) - n_h(0)"""
        return float(self.n_e[0] - self.n_h[0])


def thermal_voltage(spec: JunctionSpec) -> float:
    """kT / q"""
    return constants.k * spec.temperature / constants.e


def debye_length(spec: JunctionSpec) -> float:
    """sqrt(eps kT / (2 q² n_i)) of the intrinsic semiconductor"""
    return math.sqrt(spec.permittivity * constants.k * spec.temperature
                     / (2.0 * constants.e ** 2 * spec.intrinsic_density))


def surface_potential(spec: JunctionSpec) -> float:
    """Applied boundary potential (W_s - W_m) / q + V_bias, before any oxide drop"""
    return spec.semiconductor_work_function - spec.metal_work_function + spec.bias_v


def graded_mesh(length: float, h_min: float, n_nodes: int) -> np.ndarray:
    """
    Nodes x_i = h_min (r^i - 1) / (r - 1) ending exactly at length

    Falls back to a uniform mesh when h_min is too coarse for grading.
    """
    n_cells = n_nodes - 1
    if h_min * n_cells >= length:
        return np.linspace(0.0, length, n_nodes)

    def excess(ratio: float) -> float:
        return h_min * math.expm1(n_cells * math.log(ratio)) / (ratio - 1.0) - length

    upper = 1.0 + 50.0 / n_cells
    # coarse meshes need a steeper grading than the starting bracket allows
    for _ in range(MAX_BRACKET_EXPANSIONS):
        if excess(upper) > 0:
            break
        upper = 1.0 + 2.0 * (upper - 1.0)
    else:
        raise ModelValidationError(
            f"cannot grade {n_nodes} nodes from h_min = {h_min:.3e} m to length = {length:.3e} m"
        )
    ratio = optimize.brentq(excess, 1.0 + 1e-12, upper, xtol=1e-15, rtol=1e-14)
    nodes = h_min * np.expm1(np.arange(n_nodes) * math.log(ratio)) / (ratio - 1.0)
    nodes[-1] = length
    return nodes


def _residual_and_jacobian(u: np.ndarray, widths: np.ndarray, a: float, b: float, u_surface: float):
    """
    Cell balances a * (flux_right - flux_left) - 2 sinh(u) * volume and their banded Jacobian

    b = inf selects a Dirichlet surface node, a finite b the oxide (Robin) condition.
    """
    n = u.size
    volumes = np.empty(n)
    volumes[0] = 0.5 * widths[0]
    volumes[-1] = 0.5 * widths[-1]
    volumes[1:-1] = 0.5 * (widths[:-1] + widths[1:])

    coupling = a / widths
    flux = coupling * np.diff(u)
    sinh_u = np.sinh(u)
    cosh_u = np.cosh(u)

    residual = -2.0 * sinh_u * volumes
    residual[:-1] += flux
    residual[1:] -= flux

    diagonal = -2.0 * cosh_u * volumes
    diagonal[:-1] -= coupling
    diagonal[1:] -= coupling
    upper = coupling.copy()
    lower = coupling.copy()

    if math.isinf(b):
        residual[0] = u[0] - u_surface
        diagonal[0] = 1.0
        upper[0] = 0.0
    else:
        residual[0] -= b * (u[0] - u_surface)
        diagonal[0] -= b

    banded = np.zeros((3, n))
    banded[0, 1:] = upper
    banded[1, :] = diagonal
    banded[2, :-1] = lower
    return residual, banded


def _initial_guess(x: np.ndarray, u_surface: float, debye: float) -> np.ndarray:
    """Semi-infinite Gouy-Chapman profile 4 artanh(tanh(u_s / 4) exp(-x / L_D))"""
    decay = np.tanh(u_surface / 4.0) * np.exp(-x / debye)
    guess = 4.0 * np.arctanh(np.clip(decay, -1.0 + 1e-16, 1.0 - 1e-16))
    return np.clip(guess, -abs(u_surface), abs(u_surface))


def solve_equilibrium(spec: JunctionSpec) -> JunctionProfile:
    """
    Solve the Poisson-Boltzmann boundary-value problem for one bias

    Args:
        spec: Junction and numerical settings

    Returns:
        JunctionProfile on the graded mesh

    Raises:
        JunctionSolverError: If Newton does not converge or the domain is too short
    """
    v_t = thermal_voltage(spec)
    debye = debye_length(spec)
    n_i = spec.intrinsic_density
    a = spec.permittivity * v_t / (constants.e * n_i)
    b = spec.oxide_capacitance * v_t / (constants.e * n_i)
    applied = surface_potential(spec)
    u_applied = applied / v_t
    if abs(u_applied) > MAX_SCALED_POTENTIAL:
        raise ModelValidationError(
            f"applied potential {applied:+.3f} V is {abs(u_applied):.0f} kT/q, beyond what exp() can represent"
        )

    x = graded_mesh(spec.domain_length, spec.h_min, spec.n_nodes)
    widths = np.diff(x)
    u = _initial_guess(x, u_applied, debye)
    if math.isinf(b):
        u[0] = u_applied

    logger.debug(f"Solving junction: bias {spec.bias_v:+.3f} V, applied {applied:+.4f} V, "
                 f"L_D = {debye * 1e6:.2f} um, {x.size} nodes")

    step_norm = math.inf
    iterations = 0
    for iterations in range(1, spec.max_iterations + 1):
        residual, banded = _residual_and_jacobian(u, widths, a, b, u_applied)
        try:
            step = linalg.solve_banded((1, 1), banded, -residual)
        except (ValueError, linalg.LinAlgError) as e:
            logger.error(f"Junction solver broke down at bias {spec.bias_v:+.3f} V after {iterations} iteration(s)")
            raise JunctionSolverError(f"Newton step failed: {e}") from e
        # large steps are shortened logarithmically to keep exp(u) in range
        large = np.abs(step) > 1.0
        step[large] = np.sign(step[large]) * (1.0 + np.log(np.abs(step[large])))
        u += step
        step_norm = float(np.max(np.abs(step)))
        if step_norm < spec.tolerance:
            break
    else:
        residual, _ = _residual_and_jacobian(u, widths, a, b, u_applied)
        logger.error(f"Junction solver did not converge at bias {spec.bias_v:+.3f} V")
        raise JunctionSolverError(
            f"Newton did not converge after {spec.max_iterations} iterations "
            f"(last step {step_norm:.3e} V_T, residual norm {np.max(np.abs(residual)):.3e})"
        )

    phi = v_t * u
    if phi[0] != 0 and abs(phi[-1]) > BACK_BOUNDARY_TOLERANCE * abs(phi[0]):
        raise JunctionSolverError(
            f"domain too short: phi(L) / phi_s = {phi[-1] / phi[0]:.3e} with L = {spec.domain_length:.3e} m "
            f"and Debye length {debye:.3e} m; use a longer domain"
        )
    if abs(phi[0]) > BOLTZMANN_VALIDITY_LIMIT:
        logger.warning(f"Surface band bending {phi[0]:.3f} V exceeds the Boltzmann validity limit "
                       f"of ~{BOLTZMANN_VALIDITY_LIMIT} V")

    # second-order surface slope: one-sided difference corrected by the half-cell charge
    slope = (u[1] - u[0]) / widths[0] - widths[0] * math.sinh(u[0]) / a
    return JunctionProfile(
        x=x,
        phi=phi,
        n_e=n_i * np.exp(u),
        n_h=n_i * np.exp(-u),
        surface_field=-v_t * slope,
        permittivity=spec.permittivity,
        bias_v=spec.bias_v,
        iterations=iterations,
    )


def bias_sweep(spec: JunctionSpec, biases: Sequence[float]) -> List[JunctionProfile]:
    """One profile per back-contact bias; solver errors propagate"""
    if len(biases) == 0:
        raise ModelValidationError("biases must not be empty")
    profiles = []
    for bias in biases:
        profile = solve_equilibrium(replace(spec, bias_v=float(bias)))
        logger.info(f"Bias {bias:+.3f} V: phi_s = {profile.surface_potential:+.4f} V, "
                    f"n_e - n_h at interface = {profile.interface_excess_density:.3e} m^-3 "
                    f"({profile.iterations} iterations)")
        profiles.append(profile)
    return profiles


def sheet_charge(profile: JunctionProfile) -> float:
    """
    Integrated space charge q * integral (n_h - n_e) dx in C/m²

    Negative for an electron accumulation layer. By Gauss's law it equals
    -eps * surface_field.
    """
    return constants.e * integrate.trapezoid(profile.n_h - profile.n_e, profile.x)
