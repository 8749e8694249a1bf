//! Monte Carlo BER campaigns.
//!
//! Each grid point is split into fixed-size frames. Frame `f` of point `i`
//! draws from its own ChaCha8 stream keyed by `(seed, i, f)` and frame
//! counts are merged by summation, so results do not depend on how frames
//! are scheduled across threads.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{throughput_bps, CampaignConfig, Fidelity, StreamRelation};
use crate::error::{Error, Result};
use crate::hardware::PhaseVoltageLut;
use crate::link::{ErrorCount, Link};
use crate::qam::BITS_PER_SYMBOL;
use crate::receiver::{theoretical_ber_16qam, theoretical_ebn0_for_ber, BerRecord};

/// Symbol pairs per frame.
pub const FRAME_PAIRS: u64 = 8192;

/// BER target at which SNR penalties are read off.
pub const PENALTY_TARGET_BER: f64 = 1e-4;

pub const CSV_COLUMNS: [&str; 9] = [
    "ebn0_db",
    "fidelity",
    "coupling_db",
    "stream_relation",
    "bits",
    "bit_errors",
    "ber",
    "ci_halfwidth",
    "theoretical_ber",
];

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub record: BerRecord,
    pub fidelity: Fidelity,
    /// Control-line isolation, infinite when coupling is off.
    pub coupling_db: f64,
    pub stream_relation: StreamRelation,
    pub theoretical_ber: f64,
}

impl SweepPoint {
    pub fn ebn0_db(&self) -> f64 {
        self.record.ebn0_db.unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub points: Vec<SweepPoint>,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub version: String,
    pub throughput_bps: f64,
}

/// RNG for frame `frame` of grid point `point`.
pub fn frame_rng(seed: u64, point: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 40) | frame);
    rng
}

/// Loads the configured phase–voltage table, or the synthetic default.
pub fn load_lut(config: &CampaignConfig) -> Result<PhaseVoltageLut> {
    match &config.lut_file {
        None => Ok(PhaseVoltageLut::default_synthetic()),
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            PhaseVoltageLut::from_csv(file).map_err(|e| match e {
                Error::Lut(m) => Error::Lut(format!("{}: {m}", path.display())),
                other => other,
            })
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs the configured BER sweep. `threads` of `None` uses the global pool.
pub fn run_ber_sweep(
    config: &CampaignConfig,
    lut: &PhaseVoltageLut,
    threads: Option<usize>,
) -> Result<CampaignResult> {
    config.validate().map_err(Error::Config)?;
    let start = Instant::now();
    let sweep = &config.sweep;
    let hw = config.hardware_with_coupling(sweep.coupling);
    let link = Link::new(config, lut, sweep.fidelity, &hw)?;
    let pairs = sweep.bits_per_point.div_ceil(2 * BITS_PER_SYMBOL as u64);
    let frames = pairs.div_ceil(FRAME_PAIRS);

    let jobs: Vec<(usize, u64)> = (0..sweep.ebn0_db.len())
        .flat_map(|p| (0..frames).map(move |f| (p, f)))
        .collect();
    let counts: Vec<Result<ErrorCount>> = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(p, f)| {
                let n = FRAME_PAIRS.min(pairs - f * FRAME_PAIRS);
                let mut rng = frame_rng(config.seed, p, f);
                link.run_frame(sweep.ebn0_db[p], n, sweep.stream_relation, sweep.csi, &mut rng)
            })
            .collect()
    })?;

    let mut totals = vec![ErrorCount::default(); sweep.ebn0_db.len()];
    for (&(p, _), c) in jobs.iter().zip(counts) {
        totals[p] = totals[p].merge(c?);
    }
    let coupling_db = hw.isolation_db;
    let points = sweep
        .ebn0_db
        .iter()
        .zip(totals)
        .map(|(&ebn0, c)| {
            Ok(SweepPoint {
                record: BerRecord::from_counts(Some(ebn0), c.bits, c.errors)?,
                fidelity: sweep.fidelity,
                coupling_db,
                stream_relation: sweep.stream_relation,
                theoretical_ber: theoretical_ber_16qam(ebn0),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CampaignResult {
        points,
        config_hash: config.hash(),
        seed: config.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        throughput_bps: throughput_bps(config.symbol_rate_sps),
    })
}

impl CampaignResult {
    /// CSV with a leading `#` metadata line. Wall time is left out so that
    /// reruns compare byte for byte.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# config_hash={} seed={} version={} throughput_bps={}\n",
            self.config_hash, self.seed, self.version, self.throughput_bps
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for p in &self.points {
            let r = &p.record;
            w.write_record([
                p.ebn0_db().to_string(),
                p.fidelity.to_string(),
                p.coupling_db.to_string(),
                p.stream_relation.to_string(),
                r.bits_sent.to_string(),
                r.bit_errors.to_string(),
                r.ber.to_string(),
                r.wilson_interval_halfwidth.to_string(),
                p.theoretical_ber.to_string(),
            ])
            .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8"));
        out
    }

    /// Eb/N0 at which the simulated curve crosses `target`, or `None` if it
    /// never drops to it.
    pub fn crossing_db(&self, target: f64) -> Option<f64> {
        crossing_db(&self.points, target)
    }

    /// Extra Eb/N0 the simulated curve needs over the theoretical one to
    /// reach `target`; infinite when the simulation never gets there.
    pub fn snr_penalty_db(&self, target: f64) -> f64 {
        match self.crossing_db(target) {
            Some(x) => x - theoretical_ebn0_for_ber(target),
            None => f64::INFINITY,
        }
    }
}

/// Interpolates `log10(ber)` linearly between the first pair of adjacent
/// points (by Eb/N0) that brackets `target`. Points without errors count as
/// half an error so the logarithm stays finite.
pub fn crossing_db(points: &[SweepPoint], target: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let r = &p.record;
            let ber = if r.bit_errors == 0 { 0.5 / r.bits_sent as f64 } else { r.ber };
            (p.ebn0_db(), ber)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(&(x, b)) = pts.first() {
        if b <= target {
            return Some(x);
        }
    }
    pts.windows(2).find_map(|w| {
        let ((x0, b0), (x1, b1)) = (w[0], w[1]);
        if b0 > target && b1 <= target {
            let (l0, l1, lt) = (b0.log10(), b1.log10(), target.log10());
            Some(x0 + (x1 - x0) * (l0 - lt) / (l0 - l1))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CsiMode;

    fn quick(fidelity: Fidelity) -> CampaignConfig {
        let mut c = CampaignConfig::default();
        c.sweep.ebn0_db = vec![6.0, 10.0];
        c.sweep.bits_per_point = 200_000;
        c.sweep.fidelity = fidelity;
        c
    }

    fn point(ebn0: f64, bits: u64, errors: u64) -> SweepPoint {
        SweepPoint {
            record: BerRecord::from_counts(Some(ebn0), bits, errors).unwrap(),
            fidelity: Fidelity::A,
            coupling_db: f64::INFINITY,
            stream_relation: StreamRelation::Independent,
            theoretical_ber: theoretical_ber_16qam(ebn0),
        }
    }

    #[test]
    fn same_seed_same_csv_any_thread_count() {
        let lut = PhaseVoltageLut::default_synthetic();
        for f in [Fidelity::A, Fidelity::B] {
            let c = quick(f);
            let a = run_ber_sweep(&c, &lut, Some(1)).unwrap().to_csv();
            let b = run_ber_sweep(&c, &lut, Some(4)).unwrap().to_csv();
            assert_eq!(a, b);
            let mut other = c.clone();
            other.seed += 1;
            assert_ne!(a, run_ber_sweep(&other, &lut, Some(2)).unwrap().to_csv());
        }
    }

    #[test]
    fn csv_layout() {
        let c = quick(Fidelity::A);
        let r = run_ber_sweep(&c, &PhaseVoltageLut::default_synthetic(), Some(2)).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        let meta = lines.next().unwrap();
        assert!(meta.starts_with("# config_hash="));
        assert!(meta.contains(&c.hash()));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "6");
        assert_eq!(row[1], "A");
        assert_eq!(row[2], "inf");
        assert_eq!(row[3], "independent");
        assert_eq!(row[4], "200000");
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn bits_round_up_to_whole_pairs() {
        let mut c = quick(Fidelity::A);
        c.sweep.bits_per_point = 10_001;
        let r = run_ber_sweep(&c, &PhaseVoltageLut::default_synthetic(), Some(1)).unwrap();
        assert_eq!(r.points[0].record.bits_sent, 10_008);
    }

    #[test]
    fn pilot_mode_runs() {
        let mut c = quick(Fidelity::A);
        c.sweep.csi = CsiMode::Pilot;
        let r = run_ber_sweep(&c, &PhaseVoltageLut::default_synthetic(), Some(2)).unwrap();
        assert!(r.points[0].record.ber > r.points[1].record.ber);
    }

    #[test]
    fn invalid_config_is_reported() {
        let mut c = quick(Fidelity::A);
        c.sweep.ebn0_db.clear();
        assert!(matches!(
            run_ber_sweep(&c, &PhaseVoltageLut::default_synthetic(), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let pts = [point(10.0, 1_000_000, 1000), point(12.0, 1_000_000, 10)];
        assert!((crossing_db(&pts, 1e-4).unwrap() - 11.0).abs() < 1e-12);
        assert!(crossing_db(&pts[..1], 1e-4).is_none());
        let zero = [point(10.0, 1_000_000, 1000), point(12.0, 1_000_000, 0)];
        assert!(crossing_db(&zero, 1e-4).unwrap() < 12.0);
    }

    #[test]
    fn theoretical_points_have_no_penalty() {
        let pts: Vec<SweepPoint> = (0..20)
            .map(|i| {
                let e = 4.0 + i as f64;
                let bits = 1_000_000_000_000u64;
                point(e, bits, (theoretical_ber_16qam(e) * bits as f64).round() as u64)
            })
            .collect();
        let r = CampaignResult {
            points: pts,
            config_hash: String::new(),
            seed: 0,
            wall_time_s: 0.0,
            version: String::new(),
            throughput_bps: 0.0,
        };
        assert!(r.snr_penalty_db(1e-4).abs() < 0.05);
    }
}
