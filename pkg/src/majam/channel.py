"""Stochastic scenario generation and the field-response jammer channel.

The jammer-user channel is a deterministic map from the jammer's antenna
positions to a complex vector.  Each propagation path contributes a pure
phase term: moving an antenna by ``p`` (meters, local frame) advances the
phase of path ``i`` by ``(2*pi/wavelength) * (p . t_i)`` where ``t_i`` is
the path's direction-cosine triple.  Per user ``k`` the channel entry for
antenna ``m`` is

    h[m] = sum_i conj(exp(1j * phase_i(p_m))) * b_i,

with ``b = prm @ receive_frv`` collapsing the path-response matrix and
the (fixed) user-side phases into one effective vector per transmit path.
Because the phases are linear in the coordinates, the gradient of any
smooth function of the channel with respect to the positions is available
in closed form; `jamming_power_and_gradient` returns it for the jammer's
objective.

All operations are pure functions of their inputs plus an explicitly
passed numpy Generator, so scenarios can be evaluated concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SystemConfig

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Angles
# ---------------------------------------------------------------------------

def virtual_angles(theta, phi) -> np.ndarray:
    """Direction cosines for elevation ``theta`` and azimuth ``phi``.

    Returns an array with trailing dimension 3 holding
    ``(cos(theta)cos(phi), cos(theta)sin(phi), sin(theta))``; the triple
    has unit Euclidean norm and its first two components satisfy
    ``x^2 + y^2 = cos(theta)^2 = 1 - z^2``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct = np.cos(theta)
    return np.stack([ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1)


def sample_angles(rng: np.random.Generator, n_paths: int) -> np.ndarray:
    """Draw one side's per-path direction cosines, shape (n_paths, 3).

    Elevation has density cos(theta)/2 on [-pi/2, pi/2], sampled by
    inverse CDF (sin(theta) uniform on [-1, 1]); azimuth is uniform on
    [-pi/2, pi/2].  Their joint density is cos(theta)/(2*pi).
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    theta = np.arcsin(rng.uniform(-1.0, 1.0, n_paths))
    phi = rng.uniform(-np.pi / 2.0, np.pi / 2.0, n_paths)
    return virtual_angles(theta, phi)


@dataclass(frozen=True)
class VirtualAngles:
    """Per-path direction cosines for both link ends of one user."""

    transmit: np.ndarray  # (L_t, 3)
    receive: np.ndarray   # (L_r, 3)

    def __post_init__(self):
        for name in ("transmit", "receive"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValueError(f"{name} angles must have shape (L, 3)")
            arr.setflags(write=False)


# ---------------------------------------------------------------------------
# Field-response vectors and the jammer-user channel
# ---------------------------------------------------------------------------

def transmit_frv(p, angles: np.ndarray, wavelength: float) -> np.ndarray:
    """Unit-magnitude per-path response at transmit-antenna offset ``p``.

    Entry ``i`` is ``exp(1j * (2*pi/wavelength) * (p . angles[i]))``.
    """
    rho = np.asarray(angles, dtype=float) @ np.asarray(p, dtype=float)
    return np.exp(1j * TWO_PI / wavelength * rho)


def receive_frv(u, angles: np.ndarray, wavelength: float) -> np.ndarray:
    """Unit-magnitude per-path response at user-antenna offset ``u``."""
    return transmit_frv(u, angles, wavelength)


@dataclass(frozen=True)
class UserEnvironment:
    """Everything random about one user, frozen for a single realization."""

    user_position: tuple[float, float]
    d_bs: float                       # distance to the base station, m
    d_jam: float                      # distance to the jammer origin, m
    direct_channel: np.ndarray        # (N,) BS-to-user channel
    angles: VirtualAngles
    prm: np.ndarray                   # (L_t, L_r) path-response matrix
    receive_frv: np.ndarray           # (L_r,) user-side phases
    effective_path_vector: np.ndarray  # (L_t,) cached prm @ receive_frv

    def __post_init__(self):
        if self.prm.shape != (self.angles.transmit.shape[0],
                              self.angles.receive.shape[0]):
            raise ValueError("prm shape does not match the angle counts")
        if self.receive_frv.shape[0] != self.prm.shape[1]:
            raise ValueError("receive_frv length does not match prm columns")
        if not np.allclose(np.abs(self.receive_frv), 1.0, atol=1e-9):
            raise ValueError("receive_frv entries must be pure phases")
        if not np.allclose(self.effective_path_vector,
                           self.prm @ self.receive_frv):
            raise ValueError("effective_path_vector is not prm @ receive_frv")
        for arr in (self.direct_channel, self.prm, self.receive_frv,
                    self.effective_path_vector):
            arr.setflags(write=False)


def jammer_channel(positions: np.ndarray, env: UserEnvironment,
                   wavelength: float) -> np.ndarray:
    """Jammer-to-user channel vector, shape (M,), for positions (3, M)."""
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[0] != 3:
        raise ValueError("positions must have shape (3, M)")
    phases = TWO_PI / wavelength * (env.angles.transmit @ positions)  # (L_t, M)
    frm = np.exp(1j * phases)
    return frm.conj().T @ env.effective_path_vector


def stack_jammer_geometry(envs) -> tuple[np.ndarray, np.ndarray]:
    """Stack transmit angles (K, L, 3) and effective path vectors (K, L)."""
    t = np.stack([env.angles.transmit for env in envs])
    b = np.stack([env.effective_path_vector for env in envs])
    return t, b


def jammer_channels(positions: np.ndarray, envs, wavelength: float) -> np.ndarray:
    """All users' jammer channels at once, shape (K, M)."""
    t, b = stack_jammer_geometry(envs)
    phases = TWO_PI / wavelength * np.einsum("klc,cm->klm", t, positions)
    return np.einsum("klm,kl->km", np.exp(-1j * phases), b)


def jamming_power(positions: np.ndarray, beams: np.ndarray, envs,
                  wavelength: float) -> float:
    """Total beamformed jamming power sum_k |h_k(P)^H v_k|^2."""
    h = jammer_channels(positions, envs, wavelength)
    a = np.einsum("km,mk->k", h.conj(), beams)
    return float(np.sum(np.abs(a) ** 2))


def jamming_power_and_gradient(positions: np.ndarray, beams: np.ndarray, envs,
                               wavelength: float) -> tuple[float, np.ndarray]:
    """Objective ``-sum_k |h_k(P)^H v_k|^2`` and its exact position gradient.

    The returned gradient has shape (3, M): entry (c, m) is the partial
    derivative of the objective with respect to coordinate ``c`` of
    antenna ``m``, obtained by differentiating the per-path phases (their
    coordinate gradients are the direction-cosine triples) through the
    chain rule.

    Sign convention: the *objective* is the negated jamming power, so a
    descent step on it increases the delivered interference.
    """
    positions = np.asarray(positions, dtype=float)
    beams = np.asarray(beams)
    t, b = stack_jammer_geometry(envs)
    if beams.shape[0] != positions.shape[1] or beams.shape[1] != len(envs):
        raise ValueError("beams must have shape (M, K)")
    phases = TWO_PI / wavelength * np.einsum("klc,cm->klm", t, positions)
    frm = np.exp(1j * phases)                                # (K, L, M)
    h = np.einsum("klm,kl->km", frm.conj(), b)               # (K, M)
    a = np.einsum("km,mk->k", h.conj(), beams)               # h_k^H v_k
    power = float(np.sum(np.abs(a) ** 2))
    # d a_k / d P[c, m] = v[m, k] * 1j * (2 pi / wavelength)
    #                     * sum_l t[k, l, c] * frm[k, l, m] * conj(b[k, l])
    weighted = frm * b.conj()[:, :, None]                    # (K, L, M)
    per_coord = np.einsum("klc,klm->kcm", t, weighted)       # (K, 3, M)
    inner = np.einsum("k,mk,kcm->cm", a.conj(), beams, per_coord)
    grad_power = 2.0 * TWO_PI / wavelength * np.real(1j * inner)
    return -power, -grad_power


# ---------------------------------------------------------------------------
# Scenario sampling
# ---------------------------------------------------------------------------

def realization_rng(master_seed: int, realization: int) -> np.random.Generator:
    """Child generator for one Monte-Carlo realization.

    Seeded from the entropy tuple ``(master_seed, realization)``, so the
    stream depends only on those two integers: the same realization index
    yields the same scenario regardless of which sweep point or jamming
    mode consumes it (common random numbers), and realizations can run in
    any order or in parallel.
    """
    return np.random.default_rng(np.random.SeedSequence((master_seed, realization)))


def _complex_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Circularly-symmetric unit-variance complex Gaussian samples."""
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)


def sample_scenario(config: SystemConfig, rng: np.random.Generator):
    """Draw one realization: K UserEnvironments.

    Per user, in a fixed draw order: a position uniform over the user
    disk (radius scaled by sqrt of a uniform), the BS-link Rayleigh
    fading, transmit and receive path angles, and the diagonal
    path-response entries with per-path variance ``g0 * d^-alpha / L``.
    """
    bs = np.asarray(config.geometry.bs_position)
    jammer = np.asarray(config.geometry.jammer_position)
    center = np.asarray(config.geometry.user_center)
    radius = config.geometry.user_radius_m
    n, l_paths = config.n_bs_antennas, config.n_paths
    envs = []
    for _ in range(config.n_users):
        r = radius * np.sqrt(rng.uniform())
        ang = rng.uniform(0.0, TWO_PI)
        pos = center + r * np.array([np.cos(ang), np.sin(ang)])
        d_bs = float(np.linalg.norm(pos - bs))
        d_jam = float(np.linalg.norm(pos - jammer))
        gain_bs = config.pathloss_ref_bs * d_bs ** (-config.alpha_bs)
        direct = np.sqrt(gain_bs) * _complex_normal(rng, n)
        angles = VirtualAngles(transmit=sample_angles(rng, l_paths),
                               receive=sample_angles(rng, l_paths))
        c2 = config.pathloss_ref_jam * d_jam ** (-config.alpha_jam)
        sigma = np.sqrt(c2 / l_paths) * _complex_normal(rng, l_paths)
        prm = np.diag(sigma)
        if config.random_user_offset:
            offset = rng.uniform(-0.5, 0.5, 3) * config.wavelength_m
        else:
            offset = np.zeros(3)
        g = receive_frv(offset, angles.receive, config.wavelength_m)
        envs.append(UserEnvironment(
            user_position=(float(pos[0]), float(pos[1])),
            d_bs=d_bs, d_jam=d_jam, direct_channel=direct, angles=angles,
            prm=prm, receive_frv=g, effective_path_vector=prm @ g))
    return envs


# ---------------------------------------------------------------------------
# Frozen-scenario text format
# ---------------------------------------------------------------------------
# One scenario per file.  Arrays are space-separated on a single labeled
# line; complex entries are written as "re,im"; floats use repr so the
# round trip is exact.

def _fmt_complex_array(values: np.ndarray) -> str:
    return " ".join(f"{float(v.real)!r},{float(v.imag)!r}"
                    for v in np.ravel(values))


def _parse_complex_array(text: str) -> np.ndarray:
    items = text.split()
    out = np.empty(len(items), dtype=complex)
    for i, item in enumerate(items):
        re_part, im_part = item.split(",")
        out[i] = complex(float(re_part), float(im_part))
    return out


def _parse_float_array(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split()], dtype=float)


def _fmt_float_array(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_scenario(path: str, envs) -> None:
    """Write UserEnvironments to a line-oriented text file."""
    lines = [f"majam-scenario 1 users {len(envs)}"]
    for k, env in enumerate(envs):
        lt, lr = env.prm.shape
        lines.append(f"user {k} n_bs {env.direct_channel.shape[0]} "
                     f"lt {lt} lr {lr}")
        lines.append("position " + _fmt_float_array(np.asarray(env.user_position)))
        lines.append(f"d_bs {env.d_bs!r}")
        lines.append(f"d_jam {env.d_jam!r}")
        lines.append("direct_channel " + _fmt_complex_array(env.direct_channel))
        lines.append("angles_transmit " + _fmt_float_array(env.angles.transmit))
        lines.append("angles_receive " + _fmt_float_array(env.angles.receive))
        lines.append("prm " + _fmt_complex_array(env.prm))
        lines.append("receive_frv " + _fmt_complex_array(env.receive_frv))
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


def load_scenario(path: str):
    """Read UserEnvironments written by `save_scenario`."""
    with open(path, encoding="ascii") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    header = lines[0].split()
    if header[:2] != ["majam-scenario", "1"]:
        raise ValueError(f"{path}: not a majam scenario file")
    n_users = int(header[3])
    envs = []
    cursor = 1
    for _ in range(n_users):
        meta = lines[cursor].split()
        lt, lr = int(meta[5]), int(meta[7])
        fields = {}
        for line in lines[cursor + 1:cursor + 9]:
            key, _, rest = line.partition(" ")
            fields[key] = rest
        cursor += 9
        angles = VirtualAngles(
            transmit=_parse_float_array(fields["angles_transmit"]).reshape(lt, 3),
            receive=_parse_float_array(fields["angles_receive"]).reshape(lr, 3))
        prm = _parse_complex_array(fields["prm"]).reshape(lt, lr)
        g = _parse_complex_array(fields["receive_frv"])
        pos = _parse_float_array(fields["position"])
        envs.append(UserEnvironment(
            user_position=(float(pos[0]), float(pos[1])),
            d_bs=float(fields["d_bs"]), d_jam=float(fields["d_jam"]),
            direct_channel=_parse_complex_array(fields["direct_channel"]),
            angles=angles, prm=prm, receive_frv=g,
            effective_path_vector=prm @ g))
    return envs
