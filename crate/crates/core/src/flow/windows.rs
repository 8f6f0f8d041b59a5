/// A training interval `[T1, T2]` over which the tracked quantity fell to at
/// most a fixed fraction of its starting value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HalfLifeWindow {
    pub start: usize,
    pub end: usize,
    pub t1: f64,
    pub t2: f64,
}

/// Greedy scan for consecutive windows with `L(T2) <= L(T1) / 2`; each window
/// ends at the first checkpoint that halves the value at its start and the
/// next window starts there.
pub fn half_life_windows(times: &[f64], values: &[f64]) -> Vec<HalfLifeWindow> {
    half_life_windows_with_ratio(times, values, 0.5)
}

/// As [`half_life_windows`] with `L(T2) <= ratio * L(T1)`, `0 < ratio < 1`.
pub fn half_life_windows_with_ratio(times: &[f64], values: &[f64], ratio: f64) -> Vec<HalfLifeWindow> {
    assert_eq!(times.len(), values.len());
    let mut out = Vec::new();
    let mut start = 0;
    while start + 1 < values.len() {
        let threshold = ratio * values[start];
        match (start + 1..values.len()).find(|&j| values[j] <= threshold) {
            Some(end) => {
                out.push(HalfLifeWindow {
                    start,
                    end,
                    t1: times[start],
                    t2: times[end],
                });
                start = end;
            }
            None => break,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_window_found() {
        let w = half_life_windows(&[0.0, 1.0, 2.0, 3.0], &[1.0, 0.8, 0.5, 0.4]);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].t1, w[0].t2), (0.0, 2.0));
        assert_eq!((w[0].start, w[0].end), (0, 2));
    }

    #[test]
    fn never_halving_gives_nothing() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let l: Vec<f64> = (0..10).map(|i| 1.0 - 0.04 * i as f64).collect();
        assert!(half_life_windows(&t, &l).is_empty());
        assert!(half_life_windows(&[0.0], &[1.0]).is_empty());
    }

    #[test]
    fn windows_chain_and_are_disjoint() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let l: Vec<f64> = t.iter().map(|x| (-x).exp()).collect();
        let w = half_life_windows(&t, &l);
        assert!(w.len() >= 5);
        for pair in w.windows(2) {
            assert_eq!(pair[0].end, pair[1].start);
        }
        for win in &w {
            assert!(l[win.end] <= 0.5 * l[win.start]);
        }
    }

    #[test]
    fn relaxed_ratio_gives_shorter_windows() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let l: Vec<f64> = t.iter().map(|x| 0.9f64.powf(*x)).collect();
        let strict = half_life_windows(&t, &l);
        let relaxed = half_life_windows_with_ratio(&t, &l, 0.8);
        assert!(relaxed.len() > strict.len());
    }
}
