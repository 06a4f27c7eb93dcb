use super::EmpiricalDistribution;

/// 1-Wasserstein distance between two empirical measures on the real line.
///
/// In one dimension the optimal coupling is the quantile coupling, so the
/// distance is `∫₀¹ |F_p⁻¹(u) − F_q⁻¹(u)| du`. Both quantile functions are
/// piecewise constant with breakpoints at `i/n` and `j/m`; walking the merged
/// grid in units of `1/(n·m)` keeps segment weights exact integers. Equal
/// counts reduce to the mean absolute difference of the sorted values.
pub fn wasserstein_1d(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> f64 {
    let (a, b) = (p.values(), q.values());
    let (n, m) = (a.len(), b.len());
    if n == m {
        let total: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        return total / n as f64;
    }
    // Position in units of 1/(n*m): value a[i] covers [i*m, (i+1)*m), b[j] covers [j*n, (j+1)*n).
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos = 0u64;
    let end = (n * m) as u64;
    let mut total = 0.0;
    while pos < end {
        let next_a = ((i + 1) * m) as u64;
        let next_b = ((j + 1) * n) as u64;
        let next = next_a.min(next_b);
        total += (a[i] - b[j]).abs() * (next - pos) as f64;
        pos = next;
        if next == next_a {
            i += 1;
        }
        if next == next_b {
            j += 1;
        }
    }
    total / end as f64
}
