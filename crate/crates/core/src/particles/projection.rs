use crate::error::{config, Result};

/// Euclidean projection of `proposal` onto
/// `{ lo <= x[0], x[i+1] - x[i] >= epsilon, x[n-1] <= hi }`.
///
/// With `u[i] = x[i] - i * epsilon` the set becomes the isotone cone
/// intersected with the box `[lo, hi - (n-1) epsilon]^n`. Pool-adjacent-
/// violators gives the exact cone projection and clamping the pooled values
/// into the box keeps them isotone, so a single clamp pass reaches the fixed
/// point of the alternating scheme.
///
/// `lo` may be `-inf` and `hi` may be `+inf`.
pub fn project_chain(proposal: &[f64], epsilon: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = proposal.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let span = (n - 1) as f64 * epsilon;
    let upper = hi - span;
    if !(upper >= lo) {
        return config(format!(
            "no room for {n} rods of width {epsilon} between {lo} and {hi}"
        ));
    }

    // blocks of (sum, count), merged while their means decrease
    let mut sums: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for (i, &p) in proposal.iter().enumerate() {
        let mut s = p - i as f64 * epsilon;
        let mut c = 1usize;
        while let (Some(&ps), Some(&pc)) = (sums.last(), counts.last()) {
            // compare means without dividing: ps/pc > s/c
            if ps * c as f64 > s * pc as f64 {
                s += ps;
                c += pc;
                sums.pop();
                counts.pop();
            } else {
                break;
            }
        }
        sums.push(s);
        counts.push(c);
    }

    let mut out = Vec::with_capacity(n);
    for (s, c) in sums.iter().zip(&counts) {
        let raw = s / *c as f64;
        let mean = raw.clamp(lo, upper);
        if *c == 1 && mean == raw {
            // untouched coordinate: return it bit-for-bit
            out.push(proposal[out.len()]);
            continue;
        }
        for _ in 0..*c {
            let i = out.len();
            out.push(mean + i as f64 * epsilon);
        }
    }
    Ok(out)
}
