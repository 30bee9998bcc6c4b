//! Latent-space LDA, score matrices and static CSV/SVG output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};

/// Ridge added to the within-class scatter, relative to its mean eigenvalue.
pub const LDA_RIDGE: f64 = 1e-6;

const JACOBI_SWEEPS: usize = 100;

/// Fitted linear discriminant directions.
#[derive(Clone, Debug, PartialEq)]
pub struct LdaProjection {
    /// `d × k`; column `j` is the `j`-th discriminant direction.
    pub w: Matrix,
    /// Generalised eigenvalues of the kept directions, descending.
    pub eigenvalues: Vec<f64>,
    /// Mean of the fitting data, subtracted before projecting.
    pub center: Vec<f64>,
}

impl LdaProjection {
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.center.len() {
            return Err(Error::shape("lda project", self.center.len(), x.cols()));
        }
        let mut c = x.clone();
        for i in 0..c.rows() {
            for (v, m) in c.row_mut(i).iter_mut().zip(&self.center) {
                *v -= m;
            }
        }
        c.matmul(&self.w)
    }
}

/// Within- and between-class scatter of `x` grouped by `labels`.
pub fn scatter_matrices(x: &Matrix, labels: &[usize]) -> Result<(Matrix, Matrix)> {
    if x.rows() != labels.len() {
        return Err(Error::shape("scatter labels", x.rows(), labels.len()));
    }
    let d = x.cols();
    let mean = x.column_means();
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut sw = Matrix::zeros(d, d);
    let mut sb = Matrix::zeros(d, d);
    for &c in &classes {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        let xc = x.select_rows(&idx);
        let mc = xc.column_means();
        for row in xc.iter_rows() {
            for a in 0..d {
                for b in 0..d {
                    sw[(a, b)] += (row[a] - mc[a]) * (row[b] - mc[b]);
                }
            }
        }
        let n = idx.len() as f64;
        for a in 0..d {
            for b in 0..d {
                sb[(a, b)] += n * (mc[a] - mean[a]) * (mc[b] - mean[b]);
            }
        }
    }
    Ok((sw, sb))
}

fn trace(m: &Matrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)]).sum()
}

fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            if i == j {
                let v = a[(i, i)] - s;
                if v <= 0.0 || !v.is_finite() {
                    return Err(Error::Degenerate("within-class scatter is not positive definite".into()));
                }
                l[(i, j)] = v.sqrt();
            } else {
                l[(i, j)] = (a[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L Y = B` for lower-triangular `L`.
fn forward_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut y = Matrix::zeros(n, b.cols());
    for c in 0..b.cols() {
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[(i, k)] * y[(k, c)]).sum();
            y[(i, c)] = (b[(i, c)] - s) / l[(i, i)];
        }
    }
    y
}

/// Solves `Lᵀ X = B` for lower-triangular `L`.
fn backward_solve_t(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = Matrix::zeros(n, b.cols());
    for c in 0..b.cols() {
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[(k, c)]).sum();
            x[(i, c)] = (b[(i, c)] - s) / l[(i, i)];
        }
    }
    x
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (descending) and eigenvectors as columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape("symmetric_eigen", n, a.cols()));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n).flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q))).map(|(p, q)| m[(p, q)].powi(2)).sum();
        if off.sqrt() <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, c)] = v[(r, i)];
        }
    }
    Ok((values, vectors))
}

/// Fits LDA on `x` with class `labels` and keeps `out_dims` directions
/// (capped at the latent dimension).
///
/// Solves `S_B w = λ S_W w` via the Cholesky factor of the ridge-regularised
/// `S_W`. Each direction is normalised to unit within-class variance and
/// signed so its largest-magnitude entry is positive.
pub fn lda_fit(x: &Matrix, labels: &[usize], out_dims: usize) -> Result<LdaProjection> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Degenerate("LDA needs at least two classes".into()));
    }
    for &c in &classes {
        if labels.iter().filter(|&&l| l == c).count() < 2 {
            return Err(Error::Degenerate(format!("class {c} has fewer than two points")));
        }
    }
    let d = x.cols();
    let (mut sw, mut sb) = scatter_matrices(x, labels)?;
    // pooled within-class covariance, so projected units are noise std devs
    let dof = (x.rows() - classes.len()) as f64;
    sw.scale(1.0 / dof);
    sb.scale(1.0 / dof);
    let tw = trace(&sw);
    if !(tw > 0.0) {
        return Err(Error::Degenerate("within-class scatter is zero".into()));
    }
    if trace(&sb) <= 1e-12 * tw {
        return Err(Error::Degenerate("class means coincide; between-class scatter vanishes".into()));
    }
    let ridge = LDA_RIDGE * tw / d as f64;
    for i in 0..d {
        sw[(i, i)] += ridge;
    }
    let l = cholesky(&sw)?;
    // M = L⁻¹ S_B L⁻ᵀ
    let y = forward_solve(&l, &sb);
    let m = forward_solve(&l, &y.transpose());
    let mut sym = m.clone();
    for i in 0..d {
        for j in 0..d {
            sym[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let (values, vectors) = symmetric_eigen(&sym)?;
    let k = out_dims.min(d).max(1);
    let vk = Matrix::new(d, k, (0..d).flat_map(|r| (0..k).map(move |c| (r, c))).map(|(r, c)| vectors[(r, c)]).collect())?;
    let mut w = backward_solve_t(&l, &vk);
    for c in 0..k {
        let col = w.column(c);
        let pivot = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            for r in 0..d {
                w[(r, c)] = -w[(r, c)];
            }
        }
    }
    Ok(LdaProjection {
        w,
        eigenvalues: values[..k].to_vec(),
        center: x.column_means(),
    })
}

/// Ratio `tr(S_B) / tr(S_W)` of `points` grouped by `labels`.
pub fn separation_score(points: &Matrix, labels: &[usize]) -> Result<f64> {
    let (sw, sb) = scatter_matrices(points, labels)?;
    let tw = trace(&sw);
    if !(tw > 0.0) {
        return Err(Error::Degenerate("within-class scatter is zero".into()));
    }
    Ok(trace(&sb) / tw)
}

/// Mean classifier anomaly score per group (rows, in `groups` order) and
/// output node (columns).
pub fn score_matrix(scores: &Matrix, keys: &[String], groups: &[String]) -> Result<Matrix> {
    if scores.rows() != keys.len() {
        return Err(Error::shape("score_matrix keys", scores.rows(), keys.len()));
    }
    let mut out = Matrix::zeros(groups.len(), scores.cols());
    for (g, name) in groups.iter().enumerate() {
        let idx: Vec<usize> = (0..keys.len()).filter(|&i| &keys[i] == name).collect();
        if idx.is_empty() {
            return Err(Error::Empty(format!("group {name} in score matrix")));
        }
        out.row_mut(g).copy_from_slice(&scores.select_rows(&idx).column_means());
    }
    Ok(out)
}

/// Seeded Gaussian jitter for plotting only.
pub fn jitter_for_display(points: &Matrix, scale: f64, rng: &mut Rng) -> Result<Matrix> {
    if !(scale >= 0.0) {
        return Err(Error::invalid("jitter scale must be non-negative"));
    }
    if scale == 0.0 {
        return Ok(points.clone());
    }
    let mut out = points.clone();
    out.as_mut_slice().iter_mut().for_each(|v| *v += scale * rng.normal());
    Ok(out)
}

/// CSV with a header row and 6-decimal cells.
pub fn emit_csv(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut s = header.join(",");
    s.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::shape("csv row", header.len(), format!("{} in row {i}", row.len())));
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    Ok(s)
}

/// Matrix as CSV with a leading row-name column.
pub fn matrix_csv(corner: &str, row_names: &[String], col_names: &[String], m: &Matrix) -> Result<String> {
    if row_names.len() != m.rows() || col_names.len() != m.cols() {
        return Err(Error::shape("matrix csv", format!("{}x{}", row_names.len(), col_names.len()), format!("{:?}", m.shape())));
    }
    let mut s = format!("{corner},{}\n", col_names.join(","));
    for (name, row) in row_names.iter().zip(m.iter_rows()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(s, "{name},{}", cells.join(","));
    }
    Ok(s)
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static SVG 1.1 scatter of the first two columns of `points`, one colour
/// and legend entry per distinct label in first-appearance order.
pub fn emit_scatter_svg(points: &Matrix, labels: &[String], title: &str) -> Result<String> {
    if points.rows() != labels.len() {
        return Err(Error::shape("scatter labels", points.rows(), labels.len()));
    }
    if points.rows() > 0 && points.cols() < 2 {
        return Err(Error::invalid("scatter needs two coordinates per point"));
    }
    let (w, h, pad, legend_w) = (480.0, 400.0, 40.0, 130.0);
    let mut classes: Vec<&str> = Vec::new();
    for l in labels {
        if !classes.contains(&l.as_str()) {
            classes.push(l);
        }
    }
    let range = |j: usize| -> (f64, f64) {
        if points.rows() == 0 {
            return (0.0, 1.0);
        }
        let col = points.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = range(0);
    let (y0, y1) = range(1);
    let sx = |v: f64| pad + (v - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + legend_w,
        h,
        w + legend_w,
        h
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, w + legend_w, h);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(
        s,
        r#"<text x="{pad}" y="{}" font-family="sans-serif" font-size="10">{x0:.3}</text><text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{x1:.3}</text>"#,
        h - pad + 14.0,
        w - pad,
        h - pad + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{y0:.3}</text><text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{y1:.3}</text>"#,
        pad - 4.0,
        h - pad,
        pad - 4.0,
        pad + 10.0
    );
    for (row, label) in points.iter_rows().zip(labels) {
        let c = classes.iter().position(|k| k == label).expect("label collected above");
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{}" fill-opacity="0.6"/>"#,
            sx(row[0]),
            sy(row[1]),
            PALETTE[c % PALETTE.len()]
        );
    }
    for (c, name) in classes.iter().enumerate() {
        let y = pad + 16.0 * c as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend"><circle cx="{}" cy="{}" r="4" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text></g>"#,
            w + 10.0,
            y,
            PALETTE[c % PALETTE.len()],
            w + 20.0,
            y + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}
