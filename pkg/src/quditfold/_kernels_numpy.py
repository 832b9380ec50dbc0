"""Vectorized numpy implementations of the hot kernels.

Signature-compatible with ``_kernels_numba``; used as the fallback backend
when numba is unavailable or when ``QUDITFOLD_BACKEND=numpy`` is set.  The
cost fills process configurations in fixed-size chunks to bound transient
memory.
"""
import itertools

import numpy as np

_SAW_CHUNK = 1 << 15
_PEPTIDE_CHUNK = 1 << 13

# ---------------------------------------------------------------------------
# statevector evolution
# ---------------------------------------------------------------------------


def phase_apply_table(psi, codes, table):
    psi *= table[codes]


def phase_apply_table2(psi1, psi2, codes, table):
    t = table[codes]
    psi1 *= t
    psi2 *= t


def phase_apply_direct(psi, values, c):
    psi *= np.exp(1j * c * values)


def phase_apply_direct2(psi1, psi2, values, c):
    t = np.exp(1j * c * values)
    psi1 *= t
    psi2 *= t


def proj_mixer_axis(psi, stride, d, coef):
    view = psi.reshape(-1, d, stride)
    view += coef * view.mean(axis=1, keepdims=True)


def proj_mixer_axis2(psi1, psi2, stride, d, coef):
    proj_mixer_axis(psi1, stride, d, coef)
    proj_mixer_axis(psi2, stride, d, coef)


def dense_mixer_axis(psi, stride, d, m):
    view = psi.reshape(-1, d, stride)
    view[:] = np.einsum("ab,xbs->xas", m, view)


def dense_mixer_axis2(psi1, psi2, stride, d, m):
    dense_mixer_axis(psi1, stride, d, m)
    dense_mixer_axis(psi2, stride, d, m)


def expect_values(psi, values):
    return float(np.dot(values, psi.real**2 + psi.imag**2))


def grad_inner_values(bra, ket, values):
    return float(np.dot(values, (np.conj(bra) * ket).imag))


def proj_grad_inner_axis(bra, ket, stride, d):
    sb = bra.reshape(-1, d, stride).sum(axis=1)
    sk = ket.reshape(-1, d, stride).sum(axis=1)
    return complex(np.sum(np.conj(sb) * sk) / d)


def dense_grad_inner_axis(bra, ket, stride, d, g):
    kv = ket.reshape(-1, d, stride)
    gk = np.einsum("ab,xbs->xas", g, kv)
    return complex(np.vdot(bra.reshape(-1, d, stride), gk))


# ---------------------------------------------------------------------------
# cost-vector fills
# ---------------------------------------------------------------------------


def saw_cost_fill(values, crossings, end_dist_sq, radix, relative, prefix, steps, lam):
    n_total = values.size
    n_free = steps - prefix.size
    dir_x = np.array([1, 0, -1, 0], dtype=np.int64)
    dir_y = np.array([0, 1, 0, -1], dtype=np.int64)
    for start in range(0, n_total, _SAW_CHUNK):
        stop = min(start + _SAW_CHUNK, n_total)
        idx = np.arange(start, stop, dtype=np.int64)
        n = idx.size
        digits = (idx[:, None] // radix ** np.arange(n_free, dtype=np.int64)) % radix
        turns = np.empty((n, steps), dtype=np.int64)
        turns[:, : prefix.size] = prefix
        if relative:
            t = (
                np.full(n, prefix[-1], dtype=np.int64)
                if prefix.size
                else np.full(n, 3, dtype=np.int64)
            )
            for k in range(n_free):
                t = (t + 1 - digits[:, k]) % 4
                turns[:, prefix.size + k] = t
        else:
            turns[:, prefix.size :] = digits
        xs = np.zeros((n, steps + 1), dtype=np.int64)
        ys = np.zeros((n, steps + 1), dtype=np.int64)
        np.cumsum(dir_x[turns], axis=1, out=xs[:, 1:])
        np.cumsum(dir_y[turns], axis=1, out=ys[:, 1:])
        ncross = np.zeros(n, dtype=np.int64)
        n_pos = steps + 1
        for i in range(n_pos):
            for j in range(i + 1, n_pos):
                if i == 0 and j == n_pos - 1:
                    continue
                ncross += (xs[:, i] == xs[:, j]) & (ys[:, i] == ys[:, j])
        e2 = xs[:, -1] ** 2 + ys[:, -1] ** 2
        crossings[start:stop] = ncross
        end_dist_sq[start:stop] = e2
        values[start:stop] = ncross + lam * e2


def _pair_lj(d2_int, unit_sq, sqrt_eps_ij, sigma_sq_ij):
    """Vectorized pair energy from integer squared distances; 0 at coincidence."""
    safe = np.where(d2_int == 0, np.inf, d2_int * unit_sq)
    s6 = (sigma_sq_ij / safe) ** 3
    return sqrt_eps_ij * (s6 * s6 - 2.0 * s6)


def peptide_cost_fill(
    values,
    clashes,
    lj_only,
    prefix,
    n_free,
    bb_codes,
    bb_lj,
    bb_clash,
    side_attach,
    side_codes,
    side_lj,
    side_clash,
    sqrt_eps,
    sigma_sq,
    unit_sq,
    lam,
    excl_bonds,
    tetrad,
):
    n_total = values.size
    n_bb = bb_codes.size
    n_side = side_attach.size
    n_bonds = n_bb - 1
    n_cand = np.array(
        [4 - (a > 0) - (a < n_bonds) for a in side_attach], dtype=np.int64
    )
    combo_digits = (
        np.array(
            list(itertools.product(*[range(nc) for nc in n_cand])), dtype=np.int64
        )
        if n_side
        else np.zeros((1, 0), dtype=np.int64)
    )
    n_combo = combo_digits.shape[0]

    for start in range(0, n_total, _PEPTIDE_CHUNK):
        stop = min(start + _PEPTIDE_CHUNK, n_total)
        idx = np.arange(start, stop, dtype=np.int64)
        n = idx.size
        digits = (idx[:, None] // 3 ** np.arange(n_free, dtype=np.int64)) % 3
        turns = np.empty((n, n_bonds), dtype=np.int64)
        turns[:, 0] = prefix[0]
        turns[:, 1] = prefix[1]
        t = np.full(n, prefix[1], dtype=np.int64)
        for k in range(n_free):
            t = (t + 1 + digits[:, k]) % 4
            turns[:, 2 + k] = t
        signs = np.where(np.arange(n_bonds) % 2 == 0, 1, -1)
        steps = signs[None, :, None] * tetrad[turns]
        pos = np.zeros((n, n_bb, 3), dtype=np.int64)
        np.cumsum(steps, axis=1, out=pos[:, 1:])

        base_lj = np.zeros(n)
        base_cl = np.zeros(n, dtype=np.int64)
        for i in range(n_bb):
            for j in range(i + 1, n_bb):
                d2 = ((pos[:, i] - pos[:, j]) ** 2).sum(axis=1)
                if bb_clash[i] and bb_clash[j]:
                    base_cl += d2 == 0
                if j - i > excl_bonds and bb_lj[i] and bb_lj[j]:
                    base_lj += _pair_lj(
                        d2,
                        unit_sq,
                        sqrt_eps[bb_codes[i], bb_codes[j]],
                        sigma_sq[bb_codes[i], bb_codes[j]],
                    )

        if n_side == 0:
            values[start:stop] = base_lj + lam * base_cl
            clashes[start:stop] = base_cl
            lj_only[start:stop] = base_lj
            continue

        max_c = int(n_cand.max())
        cand_pos = np.zeros((n, n_side, max_c, 3), dtype=np.int64)
        for s, a in enumerate(side_attach):
            free_mask = np.ones((n, 4), dtype=bool)
            if a > 0:
                free_mask[np.arange(n), turns[:, a - 1]] = False
            if a < n_bonds:
                free_mask[np.arange(n), turns[:, a]] = False
            order = np.argsort(~free_mask, axis=1, kind="stable")
            cand_dir = order[:, : n_cand[s]]
            sign = 1 if a % 2 == 0 else -1
            cand_pos[:, s, : n_cand[s]] = pos[:, a, None, :] + sign * tetrad[cand_dir]

        u_lj = np.zeros((n, n_side, max_c))
        u_cl = np.zeros((n, n_side, max_c), dtype=np.int64)
        for s, a in enumerate(side_attach):
            for j in range(n_bb):
                d2 = ((cand_pos[:, s, : n_cand[s]] - pos[:, j, None, :]) ** 2).sum(
                    axis=2
                )
                if side_clash[s] and bb_clash[j]:
                    u_cl[:, s, : n_cand[s]] += d2 == 0
                if abs(a - j) + 1 > excl_bonds and side_lj[s] and bb_lj[j]:
                    u_lj[:, s, : n_cand[s]] += _pair_lj(
                        d2,
                        unit_sq,
                        sqrt_eps[side_codes[s], bb_codes[j]],
                        sigma_sq[side_codes[s], bb_codes[j]],
                    )

        lj_tot = np.repeat(base_lj[:, None], n_combo, axis=1)
        cl_tot = np.repeat(base_cl[:, None], n_combo, axis=1)
        for s in range(n_side):
            lj_tot += u_lj[:, s, combo_digits[:, s]]
            cl_tot += u_cl[:, s, combo_digits[:, s]]
        for s in range(n_side):
            for s2 in range(s + 1, n_side):
                d2 = (
                    (
                        cand_pos[:, s, : n_cand[s], None, :]
                        - cand_pos[:, s2, None, : n_cand[s2], :]
                    )
                    ** 2
                ).sum(axis=3)
                pair_cl = (
                    (d2 == 0).astype(np.int64)
                    if side_clash[s] and side_clash[s2]
                    else np.zeros_like(d2)
                )
                sep = abs(side_attach[s] - side_attach[s2]) + 2
                if sep > excl_bonds and side_lj[s] and side_lj[s2]:
                    pair_lj = _pair_lj(
                        d2,
                        unit_sq,
                        sqrt_eps[side_codes[s], side_codes[s2]],
                        sigma_sq[side_codes[s], side_codes[s2]],
                    )
                else:
                    pair_lj = np.zeros(d2.shape)
                lj_tot += pair_lj[:, combo_digits[:, s], combo_digits[:, s2]]
                cl_tot += pair_cl[:, combo_digits[:, s], combo_digits[:, s2]]

        h = lj_tot + lam * cl_tot
        best = np.argmin(h, axis=1)
        rows = np.arange(n)
        values[start:stop] = h[rows, best]
        clashes[start:stop] = cl_tot[rows, best]
        lj_only[start:stop] = lj_tot[rows, best]
