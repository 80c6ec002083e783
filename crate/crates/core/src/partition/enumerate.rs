use crate::mathkit::ln_factorial;

/// All set partitions of `{0, …, n-1}` as restricted-growth label vectors.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur[i] = l;
            rec(i + 1, max.max(l), cur, out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    rec(1, 0, &mut cur, &mut out);
    out
}

/// All integer partitions of `n`, each in non-increasing order.
pub fn integer_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rest.min(cap)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Number of set partitions of `{1, …, n}` whose block sizes are `sizes`:
/// `n! / (Π n_j! Π r_s!)` with `r_s` the multiplicity of size `s`.
pub fn set_partition_multiplicity(sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    let mut ln = ln_factorial(n);
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        ln -= (j - i) as f64 * ln_factorial(sorted[i]) + ln_factorial(j - i);
        i = j;
    }
    ln.exp().round()
}
