//! Brute-force reference implementations shared by integration tests.
//! Each one takes a different route from the library code it checks.

#![allow(dead_code)]

/// Upper tail of Student's t. Substituting t = √ν·tan θ turns the density
/// into cos^(ν−1) θ on (−π/2, π/2), which Simpson's rule handles well.
pub fn t_sf(t: f64, df: f64) -> f64 {
    let theta0 = (t / df.sqrt()).atan();
    let f = |th: f64| th.cos().powf(df - 1.0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    simpson(f, theta0, half_pi, 20_000) / simpson(f, -half_pi, half_pi, 40_000)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Pearson r from raw sums.
pub fn pearson_sums(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Average rank by counting: #less + (#equal + 1) / 2.
pub fn rank_by_counting(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let less = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Kruskal–Wallis H as the ratio of between-group to total rank variance,
/// which absorbs the tie correction.
pub fn kw_variance_form(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let ranks = rank_by_counting(&pooled);
    let n = pooled.len() as f64;
    let grand = ranks.iter().sum::<f64>() / n;
    let total: f64 = ranks.iter().map(|r| (r - grand).powi(2)).sum();
    let mut offset = 0;
    let mut between = 0.0;
    for g in groups {
        let m = ranks[offset..offset + g.len()].iter().sum::<f64>() / g.len() as f64;
        between += g.len() as f64 * (m - grand).powi(2);
        offset += g.len();
    }
    (n - 1.0) * between / total
}

/// Every `k`-subset of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exact null distribution of U for untied samples of sizes `na`, `nb`,
/// by enumerating which ranks fall in the first sample.
pub fn u_distribution(na: usize, nb: usize) -> Vec<u64> {
    let mut counts = vec![0u64; na * nb + 1];
    for s in subsets(na + nb, na) {
        let rank_sum: usize = s.iter().map(|i| i + 1).sum();
        counts[rank_sum - na * (na + 1) / 2] += 1;
    }
    counts
}

/// Exact two-sided p of an observed U: mass at least as far from the mean.
pub fn u_exact_p(counts: &[u64], u: usize, na: usize, nb: usize) -> f64 {
    let mean2 = (na * nb) as i64; // 2 × mean
    let obs = (2 * u as i64 - mean2).abs();
    let total: u64 = counts.iter().sum();
    let hit: u64 = counts
        .iter()
        .enumerate()
        .filter(|(k, _)| (2 * *k as i64 - mean2).abs() >= obs)
        .map(|(_, c)| c)
        .sum();
    hit as f64 / total as f64
}

/// Signed-rank p by walking all 2^m sign assignments of the non-zero |d|.
pub fn signed_rank_enumerated(diffs: &[f64]) -> (f64, f64) {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let mags: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = rank_by_counting(&mags);
    let m = nz.len();
    let v: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total: f64 = ranks.iter().sum();
    let mean = total / 2.0;
    let mut hit = 0u64;
    for mask in 0u64..(1 << m) {
        let s: f64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (s - mean).abs() >= (v - mean).abs() {
            hit += 1;
        }
    }
    (v, hit as f64 / (1u64 << m) as f64)
}

/// Cyclic triples counted directly.
pub fn cyclic_triples(n: usize, beats: &[bool]) -> u64 {
    let b = |i: usize, j: usize| beats[i * n + j];
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if (b(i, j) && b(j, k) && b(k, i)) || (b(j, i) && b(k, j) && b(i, k)) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Row-major relation of tournament number `code` on `n` stimuli; bit `e`
/// of `code` decides the winner of the `e`-th upper-triangle pair.
pub fn tournament(n: usize, code: u64) -> Vec<bool> {
    let mut beats = vec![false; n * n];
    let mut e = 0;
    for i in 0..n {
        for j in i + 1..n {
            if code >> e & 1 == 1 {
                beats[i * n + j] = true;
            } else {
                beats[j * n + i] = true;
            }
            e += 1;
        }
    }
    beats
}

/// One-sample Kolmogorov–Smirnov distance from Uniform(0, 1).
pub fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}
