//! Residue-array kernels for GF(p) hot loops.

/// Rank of a row-major `rows × cols` residue array; the array is clobbered.
pub fn rank_mod_p(p: u32, rows: usize, cols: usize, a: &mut [u32]) -> usize {
    debug_assert_eq!(a.len(), rows * cols);
    let p64 = p as u64;
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| a[r * cols + c] != 0) else {
            continue;
        };
        if piv != rank {
            for j in c..cols {
                a.swap(piv * cols + j, rank * cols + j);
            }
        }
        let inv = inv_mod(a[rank * cols + c], p) as u64;
        for r in rank + 1..rows {
            let f = a[r * cols + c] as u64;
            if f == 0 {
                continue;
            }
            let f = f * inv % p64;
            for j in c..cols {
                let x = a[rank * cols + j] as u64;
                if x != 0 {
                    let v = a[r * cols + j] as u64 + p64 - f * x % p64;
                    a[r * cols + j] = (v % p64) as u32;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Rank over GF(2) of rows packed as bit masks.
pub fn rank_gf2(rows: &mut [u128]) -> usize {
    let mut rank = 0;
    for bit in 0..128 {
        let mask = 1u128 << bit;
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r] & mask != 0) else {
            continue;
        };
        rows.swap(piv, rank);
        let pr = rows[rank];
        for r in rank + 1..rows.len() {
            if rows[r] & mask != 0 {
                rows[r] ^= pr;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

pub fn inv_mod(a: u32, p: u32) -> u32 {
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "{a} is not invertible mod {p}");
    t.rem_euclid(p as i64) as u32
}

/// `n × n` product of residue arrays.
pub fn mat_mul_mod_p(p: u32, n: usize, a: &[u32], b: &[u32], out: &mut [u32]) {
    let p64 = p as u64;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0u64;
            for k in 0..n {
                s += a[i * n + k] as u64 * b[k * n + j] as u64 % p64;
            }
            out[i * n + j] = (s % p64) as u32;
        }
    }
}

/// Inverse of an `n × n` residue array, or `None` if singular.
pub fn inverse_mod_p(p: u32, n: usize, a: &[u32]) -> Option<Vec<u32>> {
    let w = 2 * n;
    let mut m = vec![0u32; n * w];
    for i in 0..n {
        m[i * w..i * w + n].copy_from_slice(&a[i * n..i * n + n]);
        m[i * w + n + i] = 1;
    }
    let p64 = p as u64;
    for c in 0..n {
        let piv = (c..n).find(|&r| m[r * w + c] != 0)?;
        for j in 0..w {
            m.swap(piv * w + j, c * w + j);
        }
        let inv = inv_mod(m[c * w + c], p) as u64;
        for j in 0..w {
            m[c * w + j] = (m[c * w + j] as u64 * inv % p64) as u32;
        }
        for r in 0..n {
            let f = m[r * w + c] as u64;
            if r == c || f == 0 {
                continue;
            }
            for j in 0..w {
                let v = m[r * w + j] as u64 + p64 - f * m[c * w + j] as u64 % p64;
                m[r * w + j] = (v % p64) as u32;
            }
        }
    }
    Some((0..n).flat_map(|i| m[i * w + n..i * w + w].to_vec()).collect())
}

/// Every invertible `n × n` matrix over GF(p), in lexicographic order of
/// their row-major residue arrays.
pub fn general_linear_group(p: u32, n: usize) -> Vec<Vec<u32>> {
    let total = (p as u64).pow((n * n) as u32);
    let mut out = Vec::new();
    let mut buf = vec![0u32; n * n];
    for code in 0..total {
        let mut c = code;
        for slot in buf.iter_mut().rev() {
            *slot = (c % p as u64) as u32;
            c /= p as u64;
        }
        let mut scratch = buf.clone();
        if rank_mod_p(p, n, n, &mut scratch) == n {
            out.push(buf.clone());
        }
    }
    out
}
