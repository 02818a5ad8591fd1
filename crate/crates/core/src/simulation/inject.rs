use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Add `signal` into `host` with its first sample at time `t_at`
/// (rounded to the nearest host sample).
pub fn inject(host: &TimeSeries, signal: &TimeSeries, t_at: f64) -> Result<TimeSeries> {
    if (host.fs() - signal.fs()).abs() > 1e-9 * host.fs() {
        return Err(Error::Shape(format!(
            "sample rates differ: host {} vs signal {}",
            host.fs(),
            signal.fs()
        )));
    }
    let start = host.index_of(t_at);
    if start < 0 || start as usize + signal.len() > host.len() {
        return Err(Error::Range(format!(
            "signal of {} samples at t={t_at} does not fit host [{}, {})",
            signal.len(),
            host.t0(),
            host.t0() + host.duration()
        )));
    }
    let start = start as usize;
    let mut out = host.samples().to_vec();
    for (o, s) in out[start..start + signal.len()].iter_mut().zip(signal.samples()) {
        *o += s;
    }
    host.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{colored_noise, PsdModel};
    use proptest::prelude::*;

    fn ramp(n: usize) -> TimeSeries {
        TimeSeries::new(10.0, 1.0, (0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn zeros_leave_host() {
        let h = ramp(100);
        let z = TimeSeries::zeros(10.0, 0.0, 10).unwrap();
        assert_eq!(inject(&h, &z, 3.0).unwrap(), h);
    }

    #[test]
    fn cancellation() {
        let h = ramp(100);
        let part = h.slice_samples(20, 40).unwrap().scaled(-1.0);
        let out = inject(&h, &part, h.time_at(20)).unwrap();
        assert!(out.samples()[20..40].iter().all(|&v| v == 0.0));
        assert_eq!(&out.samples()[..20], &h.samples()[..20]);
        assert_eq!(&out.samples()[40..], &h.samples()[40..]);
    }

    #[test]
    fn overflow_is_range_error() {
        let h = ramp(100);
        let s = TimeSeries::zeros(10.0, 0.0, 10).unwrap();
        assert!(matches!(inject(&h, &s, 10.5), Err(Error::Range(_))));
        assert!(matches!(inject(&h, &s, 0.0), Err(Error::Range(_))));
    }

    #[test]
    fn energy_adds_for_independent_noise() {
        let m = PsdModel::flat(1.0);
        let h = colored_noise(&m, 64.0, 256.0, 1).unwrap();
        let s = colored_noise(&m, 16.0, 256.0, 2).unwrap();
        let out = inject(&h, &s, 10.0).unwrap();
        let cross = out.energy() - h.energy() - s.energy();
        // cross term 2 sum(h s) has std 2 sqrt(N) sigma_h sigma_s
        let sd = 2.0 * (s.len() as f64).sqrt() * h.std() * s.std();
        assert!(cross.abs() < 3.0 * sd);
    }

    proptest! {
        #[test]
        fn disjoint_injections_commute(a in 0usize..40, b in 50usize..90, k in -3.0f64..3.0) {
            let h = ramp(100);
            let s1 = TimeSeries::new(10.0, 0.0, vec![k; 10]).unwrap();
            let s2 = TimeSeries::new(10.0, 0.0, vec![-2.0 * k; 10]).unwrap();
            let (ta, tb) = (h.time_at(a), h.time_at(b));
            let x = inject(&inject(&h, &s1, ta).unwrap(), &s2, tb).unwrap();
            let y = inject(&inject(&h, &s2, tb).unwrap(), &s1, ta).unwrap();
            prop_assert_eq!(x, y);
        }
    }
}
