//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use bfly_core::butterfly::{stage_stride, ButterflyMatrix, ComplexVec};
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// O(N^2) DFT straight from the definition, angles reduced mod N first.
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| {
                    let e = (j * k) % n;
                    let theta = -2.0 * std::f64::consts::PI * e as f64 / n as f64;
                    v * Complex64::new(theta.cos(), theta.sin())
                })
                .sum()
        })
        .collect()
}

pub fn to_complex(x: &ComplexVec) -> Vec<Complex64> {
    x.iter().collect()
}

pub fn random_complex(n: usize, r: &mut impl Rng) -> ComplexVec {
    ComplexVec::new(
        (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
        (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

pub fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

pub fn random_butterfly(n: usize, r: &mut impl Rng) -> ButterflyMatrix {
    ButterflyMatrix::from_fn(n, |_, _| {
        [
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
            r.gen_range(-1.0..1.0),
        ]
    })
    .unwrap()
}

/// Dense product of the stages, built without the library's own expansion:
/// each stage is written out as explicit (row, column, value) entries from
/// the block structure and multiplied into the accumulator row by row.
pub fn dense_oracle(m: &ButterflyMatrix) -> Vec<Vec<f64>> {
    let n = m.size();
    let mut acc: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for st in m.stages() {
        let stride = stage_stride(n, st.level);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(2); n];
        let mut k = 0;
        for block in (0..n).step_by(2 * stride) {
            for off in 0..stride {
                let (lo, hi) = (block + off, block + off + stride);
                let [w1, w2, w3, w4] = st.pairs[k];
                rows[lo].extend([(lo, w1), (hi, w3)]);
                rows[hi].extend([(lo, w2), (hi, w4)]);
                k += 1;
            }
        }
        acc = rows
            .iter()
            .map(|entries| {
                let mut out = vec![0.0; n];
                for &(l, v) in entries {
                    for (o, a) in out.iter_mut().zip(&acc[l]) {
                        *o += v * a;
                    }
                }
                out
            })
            .collect();
    }
    acc
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Points not dominated under (min first, max second), by pairwise checks.
pub fn brute_front(objs: &[(f64, f64)]) -> Vec<usize> {
    (0..objs.len())
        .filter(|&i| {
            !objs.iter().any(|q| {
                let p = objs[i];
                q.0 <= p.0 && q.1 >= p.1 && (q.0 < p.0 || q.1 > p.1)
            })
        })
        .collect()
}

/// Discrete-event replay of the attention pipeline in exact rationals.
///
/// K and V are projected first. Q rows then appear at a steady pace over
/// `t_q`. QK processes row `i` in `t_qk / m` once the row exists. SV runs in
/// `l` chunks of `t_sv / l`; chunk `j` may start once QK has produced a
/// `(j + 1) / l` share of S.
pub fn attention_replay(m: u64, l: u64, t_qk: u64, t_sv: u64, t_q: u64, t_k: u64, t_v: u64) -> Ratio<u64> {
    let r = |v: u64| Ratio::from_integer(v);
    let start = r(t_k + t_v);
    let q_row = Ratio::new(t_q, m);
    let qk_row = Ratio::new(t_qk, m);
    let mut qk_start = Vec::with_capacity(m as usize);
    let mut free = start;
    for i in 0..m {
        let ready = start + q_row * r(i + 1);
        let s = if ready > free { ready } else { free };
        qk_start.push(s);
        free = s + qk_row;
    }
    // time at which QK has finished a fraction f of its rows
    let progress = |f: Ratio<u64>| -> Ratio<u64> {
        let rows = f * r(m);
        let whole = rows.to_integer();
        let frac = rows - r(whole);
        if frac == r(0) {
            qk_start[(whole - 1) as usize] + qk_row
        } else {
            qk_start[whole as usize] + frac * qk_row
        }
    };
    let sv_chunk = Ratio::new(t_sv, l);
    let mut end = free;
    let mut sv_free = r(0);
    for j in 0..l {
        let need = progress(Ratio::new(j + 1, l));
        let s = if need > sv_free { need } else { sv_free };
        sv_free = s + sv_chunk;
        end = sv_free;
    }
    if t_sv == 0 && free > end {
        end = free;
    }
    end
}
