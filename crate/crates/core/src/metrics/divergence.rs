use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::features::{FeatureVector, FEATURE_DIM};
use crate::error::{Error, Result};

/// Per-dimension histogram layout for [`jsd_features`]. The range of each
/// dimension is the pooled min/max of both sets; logs are base 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramSpec {
    pub bins_per_dim: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec { bins_per_dim: 50 }
    }
}

impl HistogramSpec {
    pub fn new(bins_per_dim: usize) -> Result<Self> {
        let h = HistogramSpec { bins_per_dim };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        if self.bins_per_dim < 2 {
            return Err(Error::param("bins_per_dim must be at least 2"));
        }
        Ok(())
    }
}

fn histogram(v: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    for &x in v {
        let idx = ((x - lo) / (hi - lo) * bins as f64).floor();
        counts[(idx.max(0.0) as usize).min(bins - 1)] += 1.0;
    }
    counts
}

/// Sum of `c_k log2(p_k / m_k)` over bins with `c_k > 0`.
fn weighted_log_ratio(counts: &[f64], p: &[f64], m: &[f64]) -> f64 {
    counts
        .iter()
        .zip(p.iter().zip(m))
        .filter(|(c, _)| **c > 0.0)
        .map(|(c, (p, m))| c * (p / m).log2())
        .sum()
}

/// Jensen–Shannon divergence (base 2) between histograms of two samples,
/// binned over their pooled range. A degenerate range gives 0.
pub fn jsd_1d(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    HistogramSpec::new(bins)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("histogram input"));
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let ca = histogram(a, lo, hi, bins);
    let cb = histogram(b, lo, hi, bins);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let p: Vec<f64> = ca.iter().map(|c| c / na).collect();
    let q: Vec<f64> = cb.iter().map(|c| c / nb).collect();
    let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
    // Accumulating counts and dividing once keeps disjoint supports at
    // exactly 1 and makes the result symmetric bit for bit.
    let kl_a = weighted_log_ratio(&ca, &p, &m) / na;
    let kl_b = weighted_log_ratio(&cb, &q, &m) / nb;
    Ok((0.5 * (kl_a + kl_b)).clamp(0.0, 1.0))
}

/// Mean over the ten feature dimensions of [`jsd_1d`].
pub fn jsd_features(real: &[FeatureVector], gen: &[FeatureVector], h: HistogramSpec) -> Result<f64> {
    h.validate()?;
    if real.is_empty() || gen.is_empty() {
        return Err(Error::Empty("feature set"));
    }
    let ra: Vec<[f64; FEATURE_DIM]> = real.iter().map(FeatureVector::to_array).collect();
    let ga: Vec<[f64; FEATURE_DIM]> = gen.iter().map(FeatureVector::to_array).collect();
    let mut total = 0.0;
    for d in 0..FEATURE_DIM {
        let a: Vec<f64> = ra.iter().map(|r| r[d]).collect();
        let b: Vec<f64> = ga.iter().map(|r| r[d]).collect();
        total += jsd_1d(&a, &b, h.bins_per_dim)?;
    }
    Ok(total / FEATURE_DIM as f64)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fitted k-means model.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl KMeans {
    /// Index of the nearest centroid; ties go to the lower index.
    pub fn assign(&self, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(x, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        best.0
    }
}

/// Lloyd's algorithm with k-means++ seeding. Clusters that empty out keep
/// their previous centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, max_iter: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    if points.len() < k {
        return Err(Error::param(format!("{} points cannot form {k} clusters", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("ragged point set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(&mut rng),
            // Every point already coincides with a centroid.
            Err(_) => rng.random_range(0..points.len()),
        };
        centroids.push(points[next].clone());
        let c = centroids.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }

    let mut model = KMeans { centroids, iterations: 0 };
    let mut labels = vec![usize::MAX; points.len()];
    for it in 0..max_iter {
        let mut changed = false;
        for (l, p) in labels.iter_mut().zip(points) {
            let a = model.assign(p);
            if *l != a {
                *l = a;
                changed = true;
            }
        }
        model.iterations = it + 1;
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for j in 0..k {
            if counts[j] > 0 {
                model.centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdbConfig {
    pub k: usize,
    pub alpha: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NdbConfig {
    fn default() -> Self {
        NdbConfig {
            k: 20,
            alpha: 0.05,
            max_iter: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdbReport {
    /// Number of bins whose occupancy differs significantly.
    pub count: usize,
    pub z_scores: Vec<f64>,
    pub real_props: Vec<f64>,
    pub gen_props: Vec<f64>,
    pub z_crit: f64,
}

/// Number of statistically different bins; see [`ndb_detail`].
pub fn ndb(real: &[FeatureVector], gen: &[FeatureVector], cfg: &NdbConfig) -> Result<usize> {
    Ok(ndb_detail(real, gen, cfg)?.count)
}

/// Clusters the real set into `k` bins (k-means on features standardised by
/// the real set's mean and standard deviation), assigns both sets to the
/// nearest centroid and runs a pooled two-proportion z-test per bin.
pub fn ndb_detail(real: &[FeatureVector], gen: &[FeatureVector], cfg: &NdbConfig) -> Result<NdbReport> {
    if gen.is_empty() {
        return Err(Error::Empty("generated feature set"));
    }
    if real.len() < cfg.k {
        return Err(Error::param(format!("need at least k = {} real vectors, got {}", cfg.k, real.len())));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::param("alpha must lie in (0, 1)"));
    }
    let ra: Vec<[f64; FEATURE_DIM]> = real.iter().map(FeatureVector::to_array).collect();
    let n = ra.len() as f64;
    let mut mean = [0.0; FEATURE_DIM];
    let mut std = [0.0; FEATURE_DIM];
    for d in 0..FEATURE_DIM {
        mean[d] = ra.iter().map(|r| r[d]).sum::<f64>() / n;
        let var = ra.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n;
        std[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let standardise = |f: &FeatureVector| -> Vec<f64> {
        let a = f.to_array();
        (0..FEATURE_DIM).map(|d| (a[d] - mean[d]) / std[d]).collect()
    };
    let rp: Vec<Vec<f64>> = real.iter().map(standardise).collect();
    let gp: Vec<Vec<f64>> = gen.iter().map(standardise).collect();
    let model = kmeans(&rp, cfg.k, cfg.max_iter, cfg.seed)?;

    let occupancy = |pts: &[Vec<f64>]| -> Vec<f64> {
        let mut c = vec![0.0; cfg.k];
        pts.iter().for_each(|p| c[model.assign(p)] += 1.0);
        c
    };
    let (cr, cg) = (occupancy(&rp), occupancy(&gp));
    let (nr, ng) = (rp.len() as f64, gp.len() as f64);
    let z_crit = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - cfg.alpha / 2.0);

    let mut z_scores = Vec::with_capacity(cfg.k);
    for j in 0..cfg.k {
        let (pr, pg) = (cr[j] / nr, cg[j] / ng);
        let pooled = (cr[j] + cg[j]) / (nr + ng);
        let se = (pooled * (1.0 - pooled) * (1.0 / nr + 1.0 / ng)).sqrt();
        z_scores.push(if se > 0.0 { (pg - pr) / se } else { 0.0 });
    }
    Ok(NdbReport {
        count: z_scores.iter().filter(|z| z.abs() > z_crit).count(),
        real_props: cr.iter().map(|c| c / nr).collect(),
        gen_props: cg.iter().map(|c| c / ng).collect(),
        z_scores,
        z_crit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::Normal as Gauss;
    use rand::Rng;

    fn gauss(n: usize, mu: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gauss::new(mu, 1.0).unwrap();
        (0..n).map(|_| g.sample(&mut rng)).collect()
    }

    /// Direct restatement: sort each sample, count per bin by the same edge
    /// rule, then sum `0.5 (p log2(p/m) + q log2(q/m))` term by term.
    fn brute_force_jsd(a: &[f64], b: &[f64], bins: usize) -> f64 {
        let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (lo, hi) = (all[0], all[all.len() - 1]);
        let count = |v: &[f64], k: usize| {
            v.iter()
                .filter(|&&x| {
                    let i = (((x - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
                    i == k
                })
                .count() as f64
        };
        let (mut sa, mut sb) = (0.0, 0.0);
        for k in 0..bins {
            let (ca, cb) = (count(a, k), count(b, k));
            let (p, q) = (ca / a.len() as f64, cb / b.len() as f64);
            let m = 0.5 * (p + q);
            if ca > 0.0 {
                sa += ca * (p / m).log2();
            }
            if cb > 0.0 {
                sb += cb * (q / m).log2();
            }
        }
        0.5 * (sa / a.len() as f64 + sb / b.len() as f64)
    }

    #[test]
    fn jsd_matches_brute_force_on_gaussians() {
        let a = gauss(1000, 0.0, 1);
        let b = gauss(1000, 1.0, 2);
        let j = jsd_1d(&a, &b, 50).unwrap();
        assert_eq!(j, brute_force_jsd(&a, &b, 50));
        assert!(j > 0.05 && j < 0.3, "{j}");
    }

    #[test]
    fn jsd_identity_and_disjoint() {
        let a = gauss(300, 0.0, 3);
        assert!(jsd_1d(&a, &a, 50).unwrap() <= 1e-12);
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert_eq!(jsd_1d(&a, &b, 50).unwrap(), 1.0);
        assert_eq!(jsd_1d(&[1.0; 5], &[1.0; 3], 50).unwrap(), 0.0);
        assert!(jsd_1d(&a, &a, 1).is_err());
        assert!(jsd_1d(&a, &[], 50).is_err());
    }

    fn fv(seed: u64, n: usize, offset: f64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut a = [0.0; FEATURE_DIM];
                a.iter_mut().for_each(|v| *v = rng.random_range(0.0..1.0) + offset);
                FeatureVector::from_array(a)
            })
            .collect()
    }

    #[test]
    fn jsd_features_bounds() {
        let a = fv(1, 100, 0.0);
        assert!(jsd_features(&a, &a, HistogramSpec::default()).unwrap() <= 1e-12);
        let b = fv(2, 100, 5.0);
        assert_eq!(jsd_features(&a, &b, HistogramSpec::default()).unwrap(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn jsd_symmetric_and_bounded(s1 in 0u64..1000, s2 in 0u64..1000, shift in -3.0f64..3.0) {
            let a = fv(s1, 40, 0.0);
            let b = fv(s2, 60, shift);
            let ab = jsd_features(&a, &b, HistogramSpec::default()).unwrap();
            let ba = jsd_features(&b, &a, HistogramSpec::default()).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }

    /// Well-separated clusters on a 5-wide grid in the first two feature
    /// dimensions (separated in every dimension that varies, so they stay
    /// apart after standardisation).
    fn clustered(counts: &[usize], seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                let mut a = [0.0; FEATURE_DIM];
                a[0] = 100.0 * (c % 5) as f64 + rng.random_range(-1.0..1.0);
                a[1] = 100.0 * (c / 5) as f64 + rng.random_range(-1.0..1.0);
                out.push(FeatureVector::from_array(a));
            }
        }
        out
    }

    #[test]
    fn ndb_identity() {
        let a = clustered(&[50; 20], 1);
        assert_eq!(ndb(&a, &a, &NdbConfig::default()).unwrap(), 0);
        let b = fv(3, 200, 0.0);
        assert_eq!(ndb(&b, &b, &NdbConfig::default()).unwrap(), 0);
    }

    #[test]
    fn ndb_collapsed_generator_differs_everywhere() {
        let real = clustered(&[50; 20], 2);
        let mut counts = vec![0; 20];
        counts[7] = 1000;
        let gen = clustered(&counts, 3);
        let rep = ndb_detail(&real, &gen, &NdbConfig::default()).unwrap();
        assert_eq!(rep.count, 20);
        // Direct z for one emptied bin: p_r = 0.05, p_g = 0.
        let (nr, ng) = (1000.0, 1000.0);
        let pooled: f64 = 50.0 / (nr + ng);
        let z = (0.0 - 0.05) / (pooled * (1.0 - pooled) * (1.0 / nr + 1.0 / ng)).sqrt();
        let emptied = rep.gen_props.iter().position(|&p| p == 0.0).unwrap();
        assert!((rep.z_scores[emptied] - z).abs() < 1e-9);
        assert!((rep.z_crit - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn ndb_grows_as_generator_collapses() {
        let real = clustered(&[50; 20], 4);
        let mut last = 0;
        for kept in [20usize, 15, 10, 5, 1] {
            let mut counts = vec![0; 20];
            let per = 1000 / kept;
            counts.iter_mut().take(kept).for_each(|c| *c = per);
            let gen = clustered(&counts, 5);
            let n = ndb(&real, &gen, &NdbConfig::default()).unwrap();
            assert!(n >= last, "kept {kept}: {n} < {last}");
            last = n;
        }
        assert_eq!(last, 20);
    }

    #[test]
    fn ndb_errors_and_determinism() {
        let a = fv(6, 30, 0.0);
        assert!(ndb(&a, &[], &NdbConfig::default()).is_err());
        assert!(ndb(&a[..10], &a, &NdbConfig::default()).is_err());
        let b = fv(7, 30, 0.2);
        let cfg = NdbConfig { seed: 42, ..NdbConfig::default() };
        assert_eq!(ndb_detail(&a, &b, &cfg).unwrap(), ndb_detail(&a, &b, &cfg).unwrap());
    }

    #[test]
    fn kmeans_recovers_separated_clusters() {
        let pts: Vec<Vec<f64>> = clustered(&[30, 30, 30], 8).iter().map(|f| f.to_array().to_vec()).collect();
        let m = kmeans(&pts, 3, 100, 1).unwrap();
        let mut xs: Vec<f64> = m.centroids.iter().map(|c| c[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, want) in xs.iter().zip([0.0, 100.0, 200.0]) {
            assert!((x - want).abs() < 1.0);
        }
    }
}
