//! Brute-force reference implementations used to check the fast paths.
#![allow(dead_code)]

/// LCS length by enumerating every subsequence of the shorter input and
/// keeping the longest one that is also a subsequence of the other.
pub fn lcs_by_enumeration<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "enumeration oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let picked: Vec<&T> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &short[i])
            .collect();
        if picked.len() > best && is_subsequence(&picked, long) {
            best = picked.len();
        }
    }
    best
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// Every monotone path from (0,0) to (rows-1, cols-1) with steps
/// (0,1), (1,0), (1,1).
pub fn all_monotone_paths(rows: usize, cols: usize) -> Vec<Vec<(usize, usize)>> {
    fn walk(
        m: usize,
        t: usize,
        rows: usize,
        cols: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        cur.push((m, t));
        if (m, t) == (rows - 1, cols - 1) {
            out.push(cur.clone());
        } else {
            if t + 1 < cols {
                walk(m, t + 1, rows, cols, cur, out);
            }
            if m + 1 < rows {
                walk(m + 1, t, rows, cols, cur, out);
            }
            if m + 1 < rows && t + 1 < cols {
                walk(m + 1, t + 1, rows, cols, cur, out);
            }
        }
        cur.pop();
    }
    let mut out = Vec::new();
    walk(0, 0, rows, cols, &mut Vec::new(), &mut out);
    out
}

/// Minimum path cost over every monotone path.
pub fn min_path_cost(cost: &[Vec<f64>]) -> f64 {
    all_monotone_paths(cost.len(), cost[0].len())
        .iter()
        .map(|p| p.iter().map(|&(m, t)| cost[m][t]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Checks the staircase invariants of a 0/1 alignment given as rows.
pub fn is_staircase(a: &[Vec<u8>]) -> bool {
    let rows = a.len();
    let cols = a[0].len();
    let ones: Vec<(usize, usize)> = (0..rows)
        .flat_map(|m| (0..cols).map(move |t| (m, t)))
        .filter(|&(m, t)| a[m][t] == 1)
        .collect();
    let steps_ok = ones.windows(2).all(|w| {
        matches!(
            (w[1].0 - w[0].0, w[1].1 as isize - w[0].1 as isize),
            (0, 1) | (1, 0) | (1, 1)
        )
    });
    let rows_ok = a.iter().all(|r| r.contains(&1));
    let cols_ok = (0..cols).all(|t| a.iter().any(|r| r[t] == 1));
    ones.first() == Some(&(0, 0))
        && ones.last() == Some(&(rows - 1, cols - 1))
        && steps_ok
        && rows_ok
        && cols_ok
}

/// Textbook two-pass Pearson correlation.
pub fn pearson_reference(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}
