"""Numba implementations of the hot kernels.

All statevector kernels mutate contiguous complex128 arrays in place and
address one qudit "axis" at a time: for a qudit with ``stride`` (the product
of the radices of all lower-significance qudits) and radix ``d``, the
amplitudes of fiber ``(base, off)`` live at ``base + off + j * stride`` for
``j in range(d)``.

The cost-vector fill kernels decode every mixed-radix configuration index on
the fly (first free digit = least significant) so no intermediate geometry
arrays are materialized.
"""
import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# statevector evolution
# ---------------------------------------------------------------------------


@njit(cache=True)
def phase_apply_table(psi, codes, table):
    for i in range(psi.size):
        psi[i] *= table[codes[i]]


@njit(cache=True)
def phase_apply_table2(psi1, psi2, codes, table):
    for i in range(psi1.size):
        t = table[codes[i]]
        psi1[i] *= t
        psi2[i] *= t


@njit(cache=True)
def phase_apply_direct(psi, values, c):
    """psi[i] *= exp(1j * c * values[i])."""
    for i in range(psi.size):
        th = c * values[i]
        psi[i] *= complex(np.cos(th), np.sin(th))


@njit(cache=True)
def phase_apply_direct2(psi1, psi2, values, c):
    for i in range(psi1.size):
        th = c * values[i]
        t = complex(np.cos(th), np.sin(th))
        psi1[i] *= t
        psi2[i] *= t


@njit(cache=True)
def proj_mixer_axis(psi, stride, d, coef):
    """psi += coef * |+><+| psi on one qudit axis (rank-1 mean update)."""
    block = stride * d
    inv = 1.0 / d
    for base in range(0, psi.size, block):
        for off in range(stride):
            j0 = base + off
            m = 0.0 + 0.0j
            for j in range(d):
                m += psi[j0 + j * stride]
            m *= inv * coef
            for j in range(d):
                psi[j0 + j * stride] += m


@njit(cache=True)
def proj_mixer_axis2(psi1, psi2, stride, d, coef):
    block = stride * d
    inv = 1.0 / d
    for base in range(0, psi1.size, block):
        for off in range(stride):
            j0 = base + off
            m1 = 0.0 + 0.0j
            m2 = 0.0 + 0.0j
            for j in range(d):
                idx = j0 + j * stride
                m1 += psi1[idx]
                m2 += psi2[idx]
            m1 *= inv * coef
            m2 *= inv * coef
            for j in range(d):
                idx = j0 + j * stride
                psi1[idx] += m1
                psi2[idx] += m2


@njit(cache=True)
def dense_mixer_axis(psi, stride, d, m):
    """Apply the d x d matrix ``m`` to one qudit axis."""
    block = stride * d
    buf = np.empty(d, dtype=np.complex128)
    for base in range(0, psi.size, block):
        for off in range(stride):
            j0 = base + off
            for a in range(d):
                acc = 0.0 + 0.0j
                for b in range(d):
                    acc += m[a, b] * psi[j0 + b * stride]
                buf[a] = acc
            for a in range(d):
                psi[j0 + a * stride] = buf[a]


@njit(cache=True)
def dense_mixer_axis2(psi1, psi2, stride, d, m):
    block = stride * d
    buf1 = np.empty(d, dtype=np.complex128)
    buf2 = np.empty(d, dtype=np.complex128)
    for base in range(0, psi1.size, block):
        for off in range(stride):
            j0 = base + off
            for a in range(d):
                acc1 = 0.0 + 0.0j
                acc2 = 0.0 + 0.0j
                for b in range(d):
                    idx = j0 + b * stride
                    acc1 += m[a, b] * psi1[idx]
                    acc2 += m[a, b] * psi2[idx]
                buf1[a] = acc1
                buf2[a] = acc2
            for a in range(d):
                idx = j0 + a * stride
                psi1[idx] = buf1[a]
                psi2[idx] = buf2[a]


@njit(cache=True)
def expect_values(psi, values):
    """Sum of values[i] * |psi[i]|^2."""
    acc = 0.0
    for i in range(psi.size):
        z = psi[i]
        acc += values[i] * (z.real * z.real + z.imag * z.imag)
    return acc


@njit(cache=True)
def grad_inner_values(bra, ket, values):
    """Im <bra| diag(values) |ket>."""
    acc = 0.0
    for i in range(bra.size):
        b = bra[i]
        k = ket[i]
        acc += values[i] * (b.real * k.imag - b.imag * k.real)
    return acc


@njit(cache=True)
def proj_grad_inner_axis(bra, ket, stride, d):
    """<bra| |+><+| |ket> on one qudit axis, summed over fibers."""
    block = stride * d
    inv = 1.0 / d
    acc = 0.0 + 0.0j
    for base in range(0, bra.size, block):
        for off in range(stride):
            j0 = base + off
            sb = 0.0 + 0.0j
            sk = 0.0 + 0.0j
            for j in range(d):
                idx = j0 + j * stride
                sb += bra[idx]
                sk += ket[idx]
            acc += np.conj(sb) * sk * inv
    return acc


@njit(cache=True)
def dense_grad_inner_axis(bra, ket, stride, d, g):
    """<bra| g |ket> on one qudit axis, summed over fibers."""
    block = stride * d
    acc = 0.0 + 0.0j
    for base in range(0, bra.size, block):
        for off in range(stride):
            j0 = base + off
            for a in range(d):
                ga = 0.0 + 0.0j
                for b in range(d):
                    ga += g[a, b] * ket[j0 + b * stride]
                acc += np.conj(bra[j0 + a * stride]) * ga
    return acc


# ---------------------------------------------------------------------------
# cost-vector fills
# ---------------------------------------------------------------------------


@njit(cache=True)
def saw_cost_fill(values, crossings, end_dist_sq, radix, relative, prefix, steps, lam):
    """Fill per-configuration square-lattice walk costs.

    Configuration index x encodes the free turns (first free turn = least
    significant digit).  Cost = crossings + lam * (endpoint distance)^2, with
    the (first, last) site pair exempt from crossing counting.
    """
    n_free = steps - prefix.size
    n_pos = steps + 1
    xs = np.empty(n_pos, dtype=np.int64)
    ys = np.empty(n_pos, dtype=np.int64)
    for x in range(values.size):
        t = prefix[prefix.size - 1] if prefix.size > 0 else 3
        xs[0] = 0
        ys[0] = 0
        cx = 0
        cy = 0
        rem = x
        for i in range(steps):
            if i < prefix.size:
                turn = prefix[i]
            else:
                digit = rem % radix
                rem //= radix
                if relative:
                    turn = (t + 1 - digit) % 4
                else:
                    turn = digit
            t = turn
            if turn == 0:
                cx += 1
            elif turn == 1:
                cy += 1
            elif turn == 2:
                cx -= 1
            else:
                cy -= 1
            xs[i + 1] = cx
            ys[i + 1] = cy
        ncross = 0
        for i in range(n_pos):
            jmax = n_pos - 1 if i == 0 else n_pos
            for j in range(i + 1, jmax):
                if xs[i] == xs[j] and ys[i] == ys[j]:
                    ncross += 1
        e2 = cx * cx + cy * cy
        crossings[x] = ncross
        end_dist_sq[x] = e2
        values[x] = ncross + lam * e2


@njit(cache=True)
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
    """Fill peptide costs: backbone decode, side placement, partial minimization.

    For each configuration the side atoms are enumerated over their candidate
    sites (the attachment atom's parity tetrad minus the directions used by
    the bonds to its backbone neighbours) and the combination minimizing
    lj + lam * clashes is kept; ties resolve to the lexicographically first
    combination (side atoms in order, candidate directions ascending).
    """
    n_bb = bb_codes.size
    n_side = side_attach.size
    n_bonds = n_bb - 1
    turns = np.empty(n_bonds, dtype=np.int64)
    pos = np.empty((n_bb, 3), dtype=np.int64)
    cand_pos = np.empty((n_side, 4, 3), dtype=np.int64)
    n_cand = np.empty(n_side, dtype=np.int64)
    u_lj = np.empty((n_side, 4), dtype=np.float64)
    u_cl = np.empty((n_side, 4), dtype=np.int64)
    w_lj = np.empty((n_side, n_side, 4, 4), dtype=np.float64)
    w_cl = np.empty((n_side, n_side, 4, 4), dtype=np.int64)
    digit = np.empty(n_side, dtype=np.int64)

    for x in range(values.size):
        # decode the backbone turns
        t = prefix[1]
        turns[0] = prefix[0]
        turns[1] = prefix[1]
        rem = x
        for k in range(n_free):
            dk = rem % 3
            rem //= 3
            t = (t + 1 + dk) % 4
            turns[2 + k] = t
        pos[0, 0] = 0
        pos[0, 1] = 0
        pos[0, 2] = 0
        for i in range(n_bonds):
            sign = 1 if i % 2 == 0 else -1
            for c in range(3):
                pos[i + 1, c] = pos[i, c] + sign * tetrad[turns[i], c]

        # backbone-backbone terms
        base_lj = 0.0
        base_cl = 0
        for i in range(n_bb):
            for j in range(i + 1, n_bb):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                dz = pos[i, 2] - pos[j, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 == 0:
                    if bb_clash[i] and bb_clash[j]:
                        base_cl += 1
                elif j - i > excl_bonds and bb_lj[i] and bb_lj[j]:
                    s6 = (sigma_sq[bb_codes[i], bb_codes[j]] / (d2 * unit_sq)) ** 3
                    base_lj += sqrt_eps[bb_codes[i], bb_codes[j]] * (s6 * s6 - 2.0 * s6)

        # candidate sites per side atom
        for s in range(n_side):
            a = side_attach[s]
            taken0 = turns[a - 1] if a > 0 else -1
            taken1 = turns[a] if a < n_bonds else -1
            sign = 1 if a % 2 == 0 else -1
            nc = 0
            for direction in range(4):
                if direction != taken0 and direction != taken1:
                    for c in range(3):
                        cand_pos[s, nc, c] = pos[a, c] + sign * tetrad[direction, c]
                    nc += 1
            if nc == 0:
                for direction in range(4):
                    for c in range(3):
                        cand_pos[s, direction, c] = (
                            pos[a, c] + sign * tetrad[direction, c]
                        )
                nc = 4
            n_cand[s] = nc

        # side-vs-backbone tables
        for s in range(n_side):
            a = side_attach[s]
            for c in range(n_cand[s]):
                acc = 0.0
                ncl = 0
                for j in range(n_bb):
                    dx = cand_pos[s, c, 0] - pos[j, 0]
                    dy = cand_pos[s, c, 1] - pos[j, 1]
                    dz = cand_pos[s, c, 2] - pos[j, 2]
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 == 0:
                        if side_clash[s] and bb_clash[j]:
                            ncl += 1
                    elif (
                        abs(a - j) + 1 > excl_bonds and side_lj[s] and bb_lj[j]
                    ):
                        s6 = (
                            sigma_sq[side_codes[s], bb_codes[j]] / (d2 * unit_sq)
                        ) ** 3
                        acc += sqrt_eps[side_codes[s], bb_codes[j]] * (
                            s6 * s6 - 2.0 * s6
                        )
                u_lj[s, c] = acc
                u_cl[s, c] = ncl

        # side-vs-side tables
        for s in range(n_side):
            for s2 in range(s + 1, n_side):
                sep = abs(side_attach[s] - side_attach[s2]) + 2
                for c in range(n_cand[s]):
                    for c2 in range(n_cand[s2]):
                        dx = cand_pos[s, c, 0] - cand_pos[s2, c2, 0]
                        dy = cand_pos[s, c, 1] - cand_pos[s2, c2, 1]
                        dz = cand_pos[s, c, 2] - cand_pos[s2, c2, 2]
                        d2 = dx * dx + dy * dy + dz * dz
                        acc = 0.0
                        ncl = 0
                        if d2 == 0:
                            if side_clash[s] and side_clash[s2]:
                                ncl = 1
                        elif sep > excl_bonds and side_lj[s] and side_lj[s2]:
                            s6 = (
                                sigma_sq[side_codes[s], side_codes[s2]] / (d2 * unit_sq)
                            ) ** 3
                            acc = sqrt_eps[side_codes[s], side_codes[s2]] * (
                                s6 * s6 - 2.0 * s6
                            )
                        w_lj[s, s2, c, c2] = acc
                        w_cl[s, s2, c, c2] = ncl

        # enumerate side placements (odometer, last side atom fastest)
        for s in range(n_side):
            digit[s] = 0
        best_h = np.inf
        best_lj = 0.0
        best_cl = 0
        while True:
            tot_lj = base_lj
            tot_cl = base_cl
            for s in range(n_side):
                tot_lj += u_lj[s, digit[s]]
                tot_cl += u_cl[s, digit[s]]
            for s in range(n_side):
                for s2 in range(s + 1, n_side):
                    tot_lj += w_lj[s, s2, digit[s], digit[s2]]
                    tot_cl += w_cl[s, s2, digit[s], digit[s2]]
            h = tot_lj + lam * tot_cl
            if h < best_h:
                best_h = h
                best_lj = tot_lj
                best_cl = tot_cl
            k = n_side - 1
            while k >= 0:
                digit[k] += 1
                if digit[k] < n_cand[k]:
                    break
                digit[k] = 0
                k -= 1
            if k < 0:
                break
        values[x] = best_h
        clashes[x] = best_cl
        lj_only[x] = best_lj
