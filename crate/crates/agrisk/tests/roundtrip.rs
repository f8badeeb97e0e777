//! Randomized serialization fixtures: every format kind must round-trip
//! bit-exactly through the binary container, and the CSV loaders must
//! produce the same in-memory structures as the binary ones.

mod common;

use agrisk::engine::{TrialLoss, YearLossTable};
use agrisk::gen::Rng;
use agrisk::io::*;
use common::random_small_world;

#[test]
fn binary_round_trip_for_all_kinds_over_randomized_fixtures() {
    // 250 worlds × 4 kinds = 1,000 fixtures
    let mut rng = Rng::new(0xF1B0);
    for _ in 0..250 {
        let (pf, yet, xelts, _) = random_small_world(&mut rng);
        let ylt = YearLossTable {
            losses: (0..rng.range_u64(1, 50))
                .map(|i| TrialLoss { trial_id: i, loss: rng.range_f64(-1.0, 1e9) })
                .collect(),
        };

        let mut buf = Vec::new();
        write_yet(&mut buf, &yet).unwrap();
        assert_eq!(read_yet(&buf[..]).unwrap(), yet);

        let mut buf = Vec::new();
        write_xelts(&mut buf, &xelts).unwrap();
        assert_eq!(read_xelts(&buf[..]).unwrap(), xelts);

        let mut buf = Vec::new();
        write_portfolio(&mut buf, &pf).unwrap();
        assert_eq!(read_portfolio(&buf[..]).unwrap(), pf);

        let mut buf = Vec::new();
        write_ylt(&mut buf, &ylt).unwrap();
        let back = read_ylt(&buf[..]).unwrap();
        for (a, b) in ylt.losses.iter().zip(&back.losses) {
            assert_eq!(a.trial_id, b.trial_id);
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        }
    }
}

#[test]
fn csv_and_binary_loaders_agree() {
    let mut rng = Rng::new(0xC5F);
    for _ in 0..50 {
        let (_, mut yet, xelts, catalogue_size) = random_small_world(&mut rng);
        // CSV rows are per occurrence, so an event-free trial has no
        // representation; give every trial at least one event
        for trial in &mut yet.trials {
            if trial.occurrences.is_empty() {
                trial.occurrences.push(agrisk::model::EventOccurrence {
                    event_id: 0,
                    timestamp: 0.5,
                    z_prog_e: 0.5,
                });
            }
        }

        let mut bin = Vec::new();
        write_yet(&mut bin, &yet).unwrap();
        let mut csv = Vec::new();
        write_yet_csv(&mut csv, &yet).unwrap();
        assert_eq!(
            read_yet(&bin[..]).unwrap(),
            read_yet_csv(&csv[..], catalogue_size).unwrap()
        );

        let mut bin = Vec::new();
        write_xelts(&mut bin, &xelts).unwrap();
        let mut csv = Vec::new();
        write_xelts_csv(&mut csv, &xelts).unwrap();
        assert_eq!(read_xelts(&bin[..]).unwrap(), read_xelts_csv(&csv[..]).unwrap());
    }
}
