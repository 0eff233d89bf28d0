use super::io::{BlockKind, BlockWeights, FfnWeights, WeightBundle};
use super::{gelu, layernorm_row, softmax_row, FabNetConfig, TokenMatrix, LN_EPS};
use crate::butterfly::{apply_butterfly, fft, ButterflyMatrix, ComplexVec};
use crate::error::{Error, Result};
use crate::par;

/// Apply `m` to every row after zero-padding to `m.size()`, keeping the first
/// `out_cols` outputs.
fn butterfly_rows(m: &ButterflyMatrix, x: &TokenMatrix, out_cols: usize) -> Result<TokenMatrix> {
    let n = m.size();
    if x.cols() > n || out_cols > n {
        return Err(Error::Shape(format!(
            "{} columns do not fit butterfly of size {n}",
            x.cols().max(out_cols)
        )));
    }
    let rows: Vec<Result<Vec<f64>>> = par::map_range(x.rows(), |r| {
        let mut v = x.row(r).to_vec();
        v.resize(n, 0.0);
        let mut y = apply_butterfly(m, &v)?;
        y.truncate(out_cols);
        Ok(y)
    });
    let mut data = Vec::with_capacity(x.rows() * out_cols);
    for row in rows {
        data.extend(row?);
    }
    TokenMatrix::new(x.rows(), out_cols, data)
}

fn add_and_norm(a: &TokenMatrix, b: &TokenMatrix, ln: &super::LayerNorm) -> TokenMatrix {
    let mut out = TokenMatrix::zeros(a.rows(), a.cols());
    for r in 0..a.rows() {
        let sum: Vec<f64> = a.row(r).iter().zip(b.row(r)).map(|(p, q)| p + q).collect();
        out.row_mut(r)
            .copy_from_slice(&layernorm_row(&sum, &ln.gamma, &ln.beta, LN_EPS));
    }
    out
}

fn ffn(x: &TokenMatrix, w: &FfnWeights) -> Result<TokenMatrix> {
    let d = x.cols();
    let mut acc = TokenMatrix::zeros(x.rows(), d);
    for (up, down) in w.ffn1.iter().zip(&w.ffn2) {
        let mut h = butterfly_rows(up, x, d)?;
        for r in 0..h.rows() {
            for v in h.row_mut(r) {
                *v = gelu(*v);
            }
        }
        let y = butterfly_rows(down, &h, d)?;
        for r in 0..acc.rows() {
            for (a, b) in acc.row_mut(r).iter_mut().zip(y.row(r)) {
                *a += b;
            }
        }
    }
    Ok(acc)
}

/// `Re(FFT_seq(FFT_hid(x)))`: each length is zero-padded to `d_pad` and
/// `seq_pad` respectively, then the result is truncated back to `x`'s shape.
pub fn fourier_mix(x: &TokenMatrix, d_pad: usize, seq_pad: usize) -> Result<TokenMatrix> {
    let (rows, cols) = (x.rows(), x.cols());
    if cols > d_pad || rows > seq_pad {
        return Err(Error::Shape(format!(
            "{rows}x{cols} exceeds padded {seq_pad}x{d_pad}"
        )));
    }
    let hidden: Vec<Result<ComplexVec>> = par::map_range(rows, |r| {
        let mut v = x.row(r).to_vec();
        v.resize(d_pad, 0.0);
        fft(&ComplexVec::from_real(&v))
    });
    let hidden: Vec<ComplexVec> = hidden.into_iter().collect::<Result<_>>()?;
    // only the first `cols` frequency columns survive truncation
    let columns: Vec<Result<Vec<f64>>> = par::map_range(cols, |c| {
        let mut col = ComplexVec::zeros(seq_pad);
        for (r, h) in hidden.iter().enumerate() {
            col.set(r, h.get(c));
        }
        let y = fft(&col)?;
        Ok(y.re[..rows].to_vec())
    });
    let mut out = TokenMatrix::zeros(rows, cols);
    for (c, col) in columns.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

pub fn fbfly_forward(x: &TokenMatrix, w: &BlockWeights, cfg: &FabNetConfig) -> Result<TokenMatrix> {
    cfg.validate()?;
    x.expect_shape(cfg.seq_len, cfg.d_hid, "fbfly input")?;
    if w.kind != BlockKind::Fbfly {
        return Err(Error::Config("fbfly_forward given abfly weights".into()));
    }
    w.check(cfg)?;
    let mixed = fourier_mix(x, cfg.d_pad()?, cfg.seq_pad()?)?;
    let h = add_and_norm(&mixed, x, &w.ln1);
    let f = ffn(&h, &w.ffn)?;
    Ok(add_and_norm(&f, &h, &w.ln2))
}

pub fn abfly_forward(x: &TokenMatrix, w: &BlockWeights, cfg: &FabNetConfig) -> Result<TokenMatrix> {
    cfg.validate()?;
    x.expect_shape(cfg.seq_len, cfg.d_hid, "abfly input")?;
    let p = match (&w.kind, &w.projections) {
        (BlockKind::Abfly, Some(p)) => p,
        _ => return Err(Error::Config("abfly_forward given fbfly weights".into())),
    };
    w.check(cfg)?;
    let d = cfg.d_hid;
    let q = butterfly_rows(&p.q, x, d)?;
    let k = butterfly_rows(&p.k, x, d)?;
    let v = butterfly_rows(&p.v, x, d)?;
    let dh = cfg.d_head();
    let scale = 1.0 / (dh as f64).sqrt();
    let seq = cfg.seq_len;
    let mut ctx = TokenMatrix::zeros(seq, d);
    for head in 0..cfg.n_heads {
        let off = head * dh;
        for i in 0..seq {
            let scores: Vec<f64> = (0..seq)
                .map(|j| {
                    let qi = &q.row(i)[off..off + dh];
                    let kj = &k.row(j)[off..off + dh];
                    qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale
                })
                .collect();
            let s = softmax_row(&scores);
            let out = &mut ctx.row_mut(i)[off..off + dh];
            for (j, sj) in s.iter().enumerate() {
                for (o, vj) in out.iter_mut().zip(&v.row(j)[off..off + dh]) {
                    *o += sj * vj;
                }
            }
        }
    }
    let attn = butterfly_rows(&p.o, &ctx, d)?;
    let h = add_and_norm(&attn, x, &w.ln1);
    let f = ffn(&h, &w.ffn)?;
    Ok(add_and_norm(&f, &h, &w.ln2))
}

/// FBfly blocks first, then ABfly blocks.
pub fn fabnet_forward(cfg: &FabNetConfig, weights: &WeightBundle, x: &TokenMatrix) -> Result<TokenMatrix> {
    cfg.validate()?;
    weights.check(cfg)?;
    x.expect_shape(cfg.seq_len, cfg.d_hid, "fabnet input")?;
    let mut h = x.clone();
    for block in &weights.blocks {
        h = match block.kind {
            BlockKind::Fbfly => fbfly_forward(&h, block, cfg)?,
            BlockKind::Abfly => abfly_forward(&h, block, cfg)?,
        };
    }
    Ok(h)
}
