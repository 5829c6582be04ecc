//! The C^∞ bump kernel `ρ(u) ∝ exp(-1/(1-u²))` on (-1, 1) and its CDF.

use std::sync::OnceLock;

const TABLE_INTERVALS: usize = 4096;
const NORMALIZER_PANELS: usize = 1 << 16;
const SMOOTHING_NODES: usize = 96;

fn bump_unnormalized(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

struct Tables {
    normalizer: f64,
    /// CDF at `-1 + 2j / TABLE_INTERVALS`.
    cdf: Vec<f64>,
    /// Midpoint nodes and normalized weights for generic convolution.
    nodes: Vec<(f64, f64)>,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for j in 1..panels {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    acc * h / 3.0
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let normalizer = simpson(bump_unnormalized, -1.0, 1.0, NORMALIZER_PANELS);
        let h = 2.0 / TABLE_INTERVALS as f64;
        let mut cdf = Vec::with_capacity(TABLE_INTERVALS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for j in 0..TABLE_INTERVALS {
            let a = -1.0 + j as f64 * h;
            acc += simpson(bump_unnormalized, a, a + h, 16) / normalizer;
            cdf.push(acc);
        }
        // Pin the right end; the accumulated value is 1 to ~1e-15.
        let total = cdf[TABLE_INTERVALS];
        for v in cdf.iter_mut() {
            *v /= total;
        }
        let step = 2.0 / SMOOTHING_NODES as f64;
        let mut nodes: Vec<(f64, f64)> = (0..SMOOTHING_NODES)
            .map(|j| {
                let v = -1.0 + (j as f64 + 0.5) * step;
                (v, bump_unnormalized(v))
            })
            .collect();
        let wsum: f64 = nodes.iter().map(|(_, w)| w).sum();
        for n in nodes.iter_mut() {
            n.1 /= wsum;
        }
        Tables {
            normalizer,
            cdf,
            nodes,
        }
    })
}

/// Normalized kernel density.
pub fn density(u: f64) -> f64 {
    bump_unnormalized(u) / tables().normalizer
}

/// `P(u) = ∫_{-1}^u ρ`, by cubic Hermite interpolation of a fine table.
pub fn cdf(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let t = tables();
    let h = 2.0 / TABLE_INTERVALS as f64;
    let pos = (u + 1.0) / h;
    let j = (pos.floor() as usize).min(TABLE_INTERVALS - 1);
    let s = pos - j as f64;
    let (p0, p1) = (t.cdf[j], t.cdf[j + 1]);
    let a = -1.0 + j as f64 * h;
    let (d0, d1) = (density(a) * h, density(a + h) * h);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * d1
}

/// `∫ g(y - h v) ρ(v) dv` by a fixed midpoint rule.
pub fn smooth(g: impl Fn(f64) -> f64, y: f64, bandwidth: f64) -> f64 {
    let mut acc = 0.0;
    for &(v, w) in &tables().nodes {
        acc += w * g(y - bandwidth * v);
    }
    acc
}

/// `(sign * ρ_h)(y)` in closed form, `2 P(y/h) - 1`.
pub fn smoothed_sign(y: f64, bandwidth: f64) -> f64 {
    2.0 * cdf(y / bandwidth) - 1.0
}
