"""Compiled kinematics kernels for the five-body model.

Everything here works on plain float64 arrays; validation (pitch range,
parameter checks) happens in the Python wrappers in :mod:`aerobat.model`.
Array layouts follow that module: ``q`` has 8 entries, ``lengths[side, k]``
holds the k-th length vector of the left (0) or right (1) wing.
"""

import numpy as np
from numba import njit

NQ = 8


@njit(cache=True)
def rotx(a):
    c = np.cos(a)
    s = np.sin(a)
    R = np.zeros((3, 3))
    R[0, 0] = 1.0
    R[1, 1] = c
    R[1, 2] = -s
    R[2, 1] = s
    R[2, 2] = c
    return R


@njit(cache=True)
def base_frames(q):
    """Body rotation ``Rz Ry Rx`` and Euler-rate map for ``q[3:6]``."""
    cr = np.cos(q[3])
    sr = np.sin(q[3])
    cp = np.cos(q[4])
    sp = np.sin(q[4])
    cy = np.cos(q[5])
    sy = np.sin(q[5])
    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr
    E = np.zeros((3, 3))
    E[0, 0] = 1.0
    E[0, 2] = -sp
    E[1, 1] = cr
    E[1, 2] = sr * cp
    E[2, 1] = -sr
    E[2, 2] = cr * cp
    return R, E


@njit(cache=True)
def mv(A, x):
    out = np.empty(3)
    for i in range(3):
        out[i] = A[i, 0] * x[0] + A[i, 1] * x[1] + A[i, 2] * x[2]
    return out


@njit(cache=True)
def mm(A, B):
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return out


@njit(cache=True)
def cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def ex_cross(v):
    # (1, 0, 0) x v
    out = np.empty(3)
    out[0] = 0.0
    out[1] = -v[2]
    out[2] = v[1]
    return out


@njit(cache=True)
def wing_points(q, lengths, side, coeffs):
    """Positions ``(n, 3)`` and Jacobians ``(n, 3, 8)`` of wing-attached points.

    A point with coefficients ``(c1, c2, c3)`` sits at body-frame offset
    ``c1 l1 + c2 R_P l2 + c3 R_P R_D l3``.
    """
    sigma = 1.0 if side == 0 else -1.0
    R_B, E = base_frames(q)
    Rp = rotx(sigma * q[6])
    Rd = rotx(sigma * q[7])
    l1 = lengths[side, 0]
    l2 = lengths[side, 1]
    l3 = lengths[side, 2]
    Rd_l3 = mv(Rd, l3)
    v2 = mv(Rp, l2)
    v3 = mv(Rp, Rd_l3)
    d2 = mv(Rp, ex_cross(l2))
    d3s = mv(Rp, ex_cross(Rd_l3))
    d3e = mv(Rp, mv(Rd, ex_cross(l3)))
    n = coeffs.shape[0]
    pos = np.empty((n, 3))
    J = np.zeros((n, 3, NQ))
    a = np.empty(3)
    das = np.empty(3)
    dae = np.empty(3)
    for i in range(n):
        c1 = coeffs[i, 0]
        c2 = coeffs[i, 1]
        c3 = coeffs[i, 2]
        for k in range(3):
            a[k] = c1 * l1[k] + c2 * v2[k] + c3 * v3[k]
            das[k] = sigma * (c2 * d2[k] + c3 * d3s[k])
            dae[k] = sigma * c3 * d3e[k]
        Ra = mv(R_B, a)
        Rs = mv(R_B, das)
        Re = mv(R_B, dae)
        for k in range(3):
            pos[i, k] = q[k] + Ra[k]
            J[i, k, k] = 1.0
            J[i, k, 6] = Rs[k]
            J[i, k, 7] = Re[k]
        for col in range(3):
            ecol = np.empty(3)
            ecol[0] = E[0, col]
            ecol[1] = E[1, col]
            ecol[2] = E[2, col]
            w = mv(R_B, cross(ecol, a))
            for k in range(3):
                J[i, k, 3 + col] = w[k]
    return pos, J


@njit(cache=True)
def bodies(q, lengths):
    """COM positions (5,3), linear (5,3,8) and local angular (5,3,8) Jacobians."""
    pos = np.zeros((5, 3))
    Jl = np.zeros((5, 3, NQ))
    Ja = np.zeros((5, 3, NQ))
    R_B, E = base_frames(q)
    for k in range(3):
        pos[0, k] = q[k]
        Jl[0, k, k] = 1.0
        for c in range(3):
            Ja[0, k, 3 + c] = E[k, c]
    coeffs = np.array([[1.0, 0.5, 0.0], [1.0, 1.0, 1.0]])
    for side in range(2):
        sigma = 1.0 if side == 0 else -1.0
        ip = 1 + 2 * side
        idd = 2 + 2 * side
        pts, J = wing_points(q, lengths, side, coeffs)
        pos[ip] = pts[0]
        pos[idd] = pts[1]
        Jl[ip] = J[0]
        Jl[idd] = J[1]
        Rp = rotx(sigma * q[6])
        Rpd = mm(Rp, rotx(sigma * q[7]))
        for k in range(3):
            for c in range(3):
                sp = 0.0
                sd = 0.0
                for m in range(3):
                    sp += Rp[m, k] * E[m, c]
                    sd += Rpd[m, k] * E[m, c]
                Ja[ip, k, 3 + c] = sp
                Ja[idd, k, 3 + c] = sd
        Ja[ip, 0, 6] = sigma
        Ja[idd, 0, 6] = sigma
        Ja[idd, 0, 7] = sigma
    return pos, Jl, Ja


@njit(cache=True)
def mass_matrix(masses, inertias, Jl, Ja):
    M = np.zeros((NQ, NQ))
    for f in range(5):
        m = masses[f]
        for i in range(NQ):
            for j in range(i, NQ):
                s = 0.0
                for k in range(3):
                    s += m * Jl[f, k, i] * Jl[f, k, j]
                    s += Ja[f, k, i] * inertias[f, k] * Ja[f, k, j]
                M[i, j] += s
    for i in range(NQ):
        for j in range(i):
            M[i, j] = M[j, i]
    return M


@njit(cache=True)
def terms(q, dq, masses, inertias, lengths, g, rel_step):
    """Mass matrix, ``C dq``, ``C^T dq`` and gravity vector.

    ``inertias`` holds the diagonal inertia of each body, shape ``(5, 3)``.
    """
    _, Jl, Ja = bodies(q, lengths)
    M = mass_matrix(masses, inertias, Jl, Ja)
    G = np.zeros(NQ)
    for f in range(5):
        for i in range(NQ):
            G[i] += g * masses[f] * Jl[f, 2, i]
    Cdq = np.zeros(NQ)
    CTdq = np.zeros(NQ)
    speed = 0.0
    for i in range(NQ):
        speed = max(speed, abs(dq[i]))
    if speed == 0.0:
        return M, Cdq, CTdq, G
    eps = rel_step / speed
    _, Jlp, Jap = bodies(q + eps * dq, lengths)
    _, Jlm, Jam = bodies(q - eps * dq, lengths)
    inv = 1.0 / (2.0 * eps)
    Mdot_dq = np.zeros(NQ)
    for f in range(5):
        m = masses[f]
        v = np.zeros(3)
        vb = np.zeros(3)
        w = np.zeros(3)
        wb = np.zeros(3)
        dJl = (Jlp[f] - Jlm[f]) * inv
        dJa = (Jap[f] - Jam[f]) * inv
        for k in range(3):
            for i in range(NQ):
                v[k] += Jl[f, k, i] * dq[i]
                vb[k] += dJl[k, i] * dq[i]
                w[k] += Ja[f, k, i] * dq[i]
                wb[k] += dJa[k, i] * dq[i]
        Iw = np.empty(3)
        Iwb = np.empty(3)
        for k in range(3):
            Iw[k] = inertias[f, k] * w[k]
            Iwb[k] = inertias[f, k] * wb[k]
        gyro = cross(w, Iw)
        for i in range(NQ):
            s_c = 0.0
            s_m = 0.0
            for k in range(3):
                s_c += m * Jl[f, k, i] * vb[k] + Ja[f, k, i] * (Iwb[k] + gyro[k])
                s_m += m * (dJl[k, i] * v[k] + Jl[f, k, i] * vb[k])
                s_m += dJa[k, i] * Iw[k] + Ja[f, k, i] * Iwb[k]
            Cdq[i] += s_c
            Mdot_dq[i] += s_m
    for i in range(NQ):
        CTdq[i] = Mdot_dq[i] - Cdq[i]
    return M, Cdq, CTdq, G


@njit(cache=True)
def cholesky_solve(A, b):
    """Solve ``A x = b`` for SPD ``A``; returns ``(x, ok)``."""
    n = A.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if not s > 0.0:
                    return np.zeros(b.shape), False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    x = b.copy()
    m = x.shape[1]
    for c in range(m):
        for i in range(n):
            s = x[i, c]
            for k in range(i):
                s -= L[i, k] * x[k, c]
            x[i, c] = s / L[i, i]
        for i in range(n - 1, -1, -1):
            s = x[i, c]
            for k in range(i + 1, n):
                s -= L[k, i] * x[k, c]
            x[i, c] = s / L[i, i]
    return x, True


@njit(cache=True)
def derivative(q, dq, xi, masses, inertias, lengths, g, rel_step,
               strip_coeffs, strip_side, strip_body, chord, span, aero_par, aero_on,
               targets, kp, kd, actuated, force_scalar, base_gain, direction, dir_mode,
               per_wing, wing_point):
    """Full right-hand side of the coupled rigid-body and lag-state system.

    ``aero_par`` packs ``(rho, lift_slope, a1, a2, b1, b2, drag, profile, v_min)``;
    ``targets`` is ``(q_s, dq_s, ddq_s, q_e, dq_e, ddq_e)``; ``force_scalar``
    is the noise plus any active step, to which ``base_gain sin(q_e)`` is added.

    Returns:
        ``(ddq, dxi, u_a, u_m, u_f, f_left, f_right, M, G, CTdq, ok)``.
    """
    M, Cdq, CTdq, G = terms(q, dq, masses, inertias, lengths, g, rel_step)
    pos, Jl, Ja = bodies(q, lengths)
    R_B, _ = base_frames(q)
    rots = np.empty((5, 3, 3))
    rots[0] = R_B
    for side in range(2):
        sigma = 1.0 if side == 0 else -1.0
        Rp = mm(R_B, rotx(sigma * q[6]))
        rots[1 + 2 * side] = Rp
        rots[2 + 2 * side] = mm(Rp, rotx(sigma * q[7]))

    # aerodynamics
    n = strip_side.shape[0]
    u_a = np.zeros(NQ)
    dxi = np.zeros(2 * n)
    if aero_on:
        rho, cla, a1, a2, b1, b2, cd, cd0, vmin = (
            aero_par[0], aero_par[1], aero_par[2], aero_par[3], aero_par[4],
            aero_par[5], aero_par[6], aero_par[7], aero_par[8])
        for side in range(2):
            idx = np.where(strip_side == side)[0]
            _, J = wing_points(q, lengths, side, strip_coeffs[idx])
            for m in range(idx.shape[0]):
                j = idx[m]
                b = strip_body[j]
                v = np.zeros(3)
                for k in range(3):
                    for i in range(NQ):
                        v[k] += J[m, k, i] * dq[i]
                w_span = 0.0
                for i in range(NQ):
                    w_span += Ja[b, 1, i] * dq[i]
                nrm = rots[b][:, 2].copy()
                chd = rots[b][:, 0].copy()
                wn = nrm[0] * v[0] + nrm[1] * v[1] + nrm[2] * v[2]
                uc = chd[0] * v[0] + chd[1] * v[1] + chd[2] * v[2]
                V = abs(uc)
                semi = 0.5 * chord[j]
                lam1 = b1 * max(V, vmin) / semi
                lam2 = b2 * max(V, vmin) / semi
                wk = wn + semi * w_span
                x1 = xi[2 * j]
                x2 = xi[2 * j + 1]
                dxi[2 * j] = -lam1 * x1 + wk
                dxi[2 * j + 1] = -lam2 * x2 + wk
                weff = (1.0 - a1 - a2) * wk + a1 * lam1 * x1 + a2 * lam2 * x2
                kk = 0.5 * rho * chord[j] * span[j]
                Fn = -kk * (cla * V * weff + cd * abs(wn) * wn)
                Fc = -kk * cd0 * V * uc
                for k in range(3):
                    fk = nrm[k] * Fn + chd[k] * Fc
                    for i in range(NQ):
                        u_a[i] += J[m, k, i] * fk

    h = np.empty(NQ)
    for i in range(NQ):
        h[i] = -Cdq[i] - G[i] + u_a[i]

    # computed torque on the joint block
    u_m = np.zeros(NQ)
    ok = True
    if actuated:
        acc_s = targets[2] + kd * (targets[1] - dq[6]) + kp * (targets[0] - q[6])
        acc_e = targets[5] + kd * (targets[4] - dq[7]) + kp * (targets[3] - q[7])
        Mbb = M[:6, :6].copy()
        rhs = np.empty((6, 3))
        for i in range(6):
            rhs[i, 0] = M[i, 6]
            rhs[i, 1] = M[i, 7]
            rhs[i, 2] = h[i]
        X, ok = cholesky_solve(Mbb, rhs)
        a_j = (acc_s, acc_e)
        for r in range(2):
            jr = 6 + r
            s = 0.0
            for c in range(2):
                schur = M[jr, 6 + c]
                for i in range(6):
                    schur -= M[jr, i] * X[i, c]
                s += schur * a_j[c]
            hb = h[jr]
            for i in range(6):
                hb -= M[jr, i] * X[i, 2]
            u_m[jr] = s - hb

    # external point force
    mag = base_gain * np.sin(q[7]) + force_scalar
    if dir_mode == 1:
        dl = direction.copy()
        dr = direction.copy()
    else:
        dl = mv(rots[2], direction)
        if per_wing:
            md = direction.copy()
            md[1] = -md[1]
            dr = mv(rots[4], md)
        else:
            dr = dl.copy()
    pt = np.array([[1.0, 1.0, wing_point]])
    _, JL = wing_points(q, lengths, 0, pt)
    _, JR = wing_points(q, lengths, 1, pt)
    fl = mag * dl
    fr = mag * dr
    u_f = np.zeros(NQ)
    for i in range(NQ):
        for k in range(3):
            u_f[i] += JL[0, k, i] * fl[k] + JR[0, k, i] * fr[k]

    rhs2 = np.empty((NQ, 1))
    for i in range(NQ):
        rhs2[i, 0] = h[i] + u_m[i] + u_f[i]
    sol, ok2 = cholesky_solve(M, rhs2)
    ddq = sol[:, 0].copy()
    return ddq, dxi, u_a, u_m, u_f, fl, fr, M, G, CTdq, pos, ok and ok2
