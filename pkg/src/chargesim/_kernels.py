"""JIT-compiled fixed-step RK4 integration kernels.

Both kernels march a 4x4 state matrix over piecewise-linear detuning
segments: segment k covers [seg_t[k], seg_t[k+1]] in seg_n[k] equal steps,
with eps_ch(t) = a_ch[k] + b_ch[k] * (t - seg_t[k]).  The Hamiltonian is
rebuilt at t, t + h/2 and t + h inside each step, so piecewise-linear
drives keep the scheme's full order.  fastmath stays off: results must be
bit-identical however many sweeps run concurrently (the kernels release
the GIL so thread pools scale).
"""

import numpy as np
from numba import njit

_KW = dict(cache=True, nogil=True)


@njit(**_KW)
def _fill_hamiltonian(h, eu, el, du2, dl2, j):
    h[0, 0] = 0.5 * (eu + el)
    h[1, 1] = 0.5 * (eu - el)
    h[2, 2] = 0.5 * (-eu + el)
    h[3, 3] = 0.5 * (-eu - el) + j
    h[0, 1] = dl2
    h[1, 0] = dl2
    h[2, 3] = dl2
    h[3, 2] = dl2
    h[0, 2] = du2
    h[2, 0] = du2
    h[1, 3] = du2
    h[3, 1] = du2
    h[0, 3] = 0.0
    h[3, 0] = 0.0
    h[1, 2] = 0.0
    h[2, 1] = 0.0


@njit(**_KW)
def _deriv_real(h, w, wref, gamma1, gamma2, hbar, out):
    # dW/dt = -(1/hbar) [H, W^T] - gamma1 (W - Wref) - gamma2 * offdiag(W)
    for i in range(4):
        for k in range(4):
            acc = 0.0
            for m in range(4):
                acc += h[i, m] * w[k, m] - w[m, i] * h[m, k]
            val = -acc / hbar - gamma1 * (w[i, k] - wref[i, k])
            if i != k:
                val -= gamma2 * w[i, k]
            out[i, k] = val


@njit(**_KW)
def _deriv_complex(h, rho, rho_ref, gamma1, gamma2, hbar, out):
    # drho/dt = -(i/hbar) [H, rho] - gamma1 (rho - rho_ref) - gamma2 * offdiag
    for i in range(4):
        for k in range(4):
            acc = 0.0 + 0.0j
            for m in range(4):
                acc += h[i, m] * rho[m, k] - rho[i, m] * h[m, k]
            val = -1j * acc / hbar - gamma1 * (rho[i, k] - rho_ref[i, k])
            if i != k:
                val -= gamma2 * rho[i, k]
            out[i, k] = val


@njit(**_KW)
def rk4_real(
    w,
    seg_t,
    seg_n,
    au,
    bu,
    al,
    bl,
    du,
    dl,
    j,
    hbar,
    gamma1,
    gamma2,
    record_stride,
    rec_t,
    rec_w,
):
    """March W in place; returns the number of recorded samples."""
    wref = w.copy()
    h = np.empty((4, 4))
    k1 = np.empty((4, 4))
    k2 = np.empty((4, 4))
    k3 = np.empty((4, 4))
    k4 = np.empty((4, 4))
    tmp = np.empty((4, 4))
    du2 = 0.5 * du
    dl2 = 0.5 * dl

    n_rec = 0
    last_rec_step = 0
    if record_stride > 0:
        rec_t[0] = seg_t[0]
        rec_w[0] = w
        n_rec = 1
    step = 0
    for seg in range(seg_n.shape[0]):
        t0 = seg_t[seg]
        n = seg_n[seg]
        dt = (seg_t[seg + 1] - t0) / n
        for i in range(n):
            tl = t0 + i * dt  # local step start
            rel = tl - t0
            # stage 1 at t
            _fill_hamiltonian(h, au[seg] + bu[seg] * rel, al[seg] + bl[seg] * rel, du2, dl2, j)
            _deriv_real(h, w, wref, gamma1, gamma2, hbar, k1)
            # stage 2/3 at t + dt/2
            relm = rel + 0.5 * dt
            _fill_hamiltonian(h, au[seg] + bu[seg] * relm, al[seg] + bl[seg] * relm, du2, dl2, j)
            for a in range(4):
                for b in range(4):
                    tmp[a, b] = w[a, b] + 0.5 * dt * k1[a, b]
            _deriv_real(h, tmp, wref, gamma1, gamma2, hbar, k2)
            for a in range(4):
                for b in range(4):
                    tmp[a, b] = w[a, b] + 0.5 * dt * k2[a, b]
            _deriv_real(h, tmp, wref, gamma1, gamma2, hbar, k3)
            # stage 4 at t + dt
            rele = rel + dt
            _fill_hamiltonian(h, au[seg] + bu[seg] * rele, al[seg] + bl[seg] * rele, du2, dl2, j)
            for a in range(4):
                for b in range(4):
                    tmp[a, b] = w[a, b] + dt * k3[a, b]
            _deriv_real(h, tmp, wref, gamma1, gamma2, hbar, k4)
            for a in range(4):
                for b in range(4):
                    w[a, b] += dt / 6.0 * (
                        k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b]
                    )
            step += 1
            if record_stride > 0 and step % record_stride == 0:
                rec_t[n_rec] = tl + dt
                rec_w[n_rec] = w
                n_rec += 1
                last_rec_step = step
    if record_stride > 0 and last_rec_step != step:
        rec_t[n_rec] = seg_t[-1]
        rec_w[n_rec] = w
        n_rec += 1
    return n_rec


@njit(**_KW)
def rk4_complex(
    rho,
    seg_t,
    seg_n,
    au,
    bu,
    al,
    bl,
    du,
    dl,
    j,
    hbar,
    gamma1,
    gamma2,
    record_stride,
    rec_t,
    rec_rho,
):
    """Complex-form twin of :func:`rk4_real`."""
    rho_ref = rho.copy()
    h = np.empty((4, 4))
    k1 = np.empty((4, 4), dtype=np.complex128)
    k2 = np.empty((4, 4), dtype=np.complex128)
    k3 = np.empty((4, 4), dtype=np.complex128)
    k4 = np.empty((4, 4), dtype=np.complex128)
    tmp = np.empty((4, 4), dtype=np.complex128)
    du2 = 0.5 * du
    dl2 = 0.5 * dl

    n_rec = 0
    last_rec_step = 0
    if record_stride > 0:
        rec_t[0] = seg_t[0]
        rec_rho[0] = rho
        n_rec = 1
    step = 0
    for seg in range(seg_n.shape[0]):
        t0 = seg_t[seg]
        n = seg_n[seg]
        dt = (seg_t[seg + 1] - t0) / n
        for i in range(n):
            tl = t0 + i * dt
            rel = tl - t0
            _fill_hamiltonian(h, au[seg] + bu[seg] * rel, al[seg] + bl[seg] * rel, du2, dl2, j)
            _deriv_complex(h, rho, rho_ref, gamma1, gamma2, hbar, k1)
            relm = rel + 0.5 * dt
            _fill_hamiltonian(h, au[seg] + bu[seg] * relm, al[seg] + bl[seg] * relm, du2, dl2, j)
            for a in range(4):
                for b in range(4):
                    tmp[a, b] = rho[a, b] + 0.5 * dt * k1[a, b]
            _deriv_complex(h, tmp, rho_ref, gamma1, gamma2, hbar, k2)
            for a in range(4):
                for b in range(4):
                    tmp[a, b] = rho[a, b] + 0.5 * dt * k2[a, b]
            _deriv_complex(h, tmp, rho_ref, gamma1, gamma2, hbar, k3)
            rele = rel + dt
            _fill_hamiltonian(h, au[seg] + bu[seg] * rele, al[seg] + bl[seg] * rele, du2, dl2, j)
            for a in range(4):
                for b in range(4):
                    tmp[a, b] = rho[a, b] + dt * k3[a, b]
            _deriv_complex(h, tmp, rho_ref, gamma1, gamma2, hbar, k4)
            for a in range(4):
                for b in range(4):
                    rho[a, b] += dt / 6.0 * (
                        k1[a, b] + 2.0 * k2[a, b] + 2.0 * k3[a, b] + k4[a, b]
                    )
            step += 1
            if record_stride > 0 and step % record_stride == 0:
                rec_t[n_rec] = tl + dt
                rec_rho[n_rec] = rho
                n_rec += 1
                last_rec_step = step
    if record_stride > 0 and last_rec_step != step:
        rec_t[n_rec] = seg_t[-1]
        rec_rho[n_rec] = rho
        n_rec += 1
    return n_rec
