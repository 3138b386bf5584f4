use gcfs_core::adm::{AdmConfig, AdmSide};
use gcfs_core::dsp::{StftAnalyzer, StftConfig, StftSynthesizer};
use gcfs_core::eval::{attenuation_db, si_sdr};
use gcfs_core::gcfsnet::{GcfsConfig, GcfsModel};
use gcfs_core::weights::{dequantize, quantize, QuantDtype, WeightContainer};
use proptest::prelude::*;

fn signal(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantize_error_is_half_a_step(v in prop::collection::vec(-1.0f64..=1.0, 1..200)) {
        for dt in [QuantDtype::Int8, QuantDtype::Int16] {
            let (q, clamped) = quantize(&v, dt);
            prop_assert_eq!(clamped, 0);
            for (a, b) in v.iter().zip(dequantize(&q, dt)) {
                prop_assert!((a - b).abs() <= 0.5 / dt.scale() + 1e-12);
            }
        }
    }

    #[test]
    fn quantize_saturates(v in prop::collection::vec(prop_oneof![-1e6f64..-1.001, 1.001f64..1e6], 1..50)) {
        let (q, clamped) = quantize(&v, QuantDtype::Int8);
        prop_assert_eq!(clamped, v.len());
        prop_assert!(q.iter().all(|c| c.abs() == 127));
    }

    #[test]
    fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
        let _ = WeightContainer::decode(&bytes);
    }

    #[test]
    fn decode_rejects_any_single_bit_flip(pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let (wc, _) = GcfsModel::zeros(GcfsConfig::monaural()).unwrap().to_container();
        let mut bytes = wc.encode();
        let i = pos.index(bytes.len());
        bytes[i] ^= 1 << bit;
        prop_assert!(WeightContainer::decode(&bytes).is_err());
    }

    #[test]
    fn si_sdr_is_scale_invariant(x in signal(64..256), noise in signal(256..257), gain in 0.01f64..100.0) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let est: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + 0.1 * b).collect();
        let a = si_sdr(&est, &x).unwrap();
        let scaled: Vec<f64> = est.iter().map(|v| v * gain).collect();
        prop_assert!((si_sdr(&scaled, &x).unwrap() - a).abs() < 1e-6);
    }

    #[test]
    fn attenuation_of_self_is_zero(x in signal(1..256), gain in 0.01f64..100.0) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        prop_assert!(attenuation_db(&x, &x).unwrap().abs() < 1e-9);
        let y: Vec<f64> = x.iter().map(|v| v * gain).collect();
        prop_assert!((attenuation_db(&y, &x).unwrap() - 20.0 * gain.log10()).abs() < 1e-6);
    }

    #[test]
    fn stft_identity_reconstructs(x in signal(512..1024)) {
        let cfg = StftConfig::hearing_aid();
        let mut an = StftAnalyzer::new(cfg, 1).unwrap();
        let mut sy = StftSynthesizer::new(cfg).unwrap();
        let mut y = Vec::new();
        let mut hop = [0.0; 32];
        for block in x.chunks_exact(32) {
            let f = an.analyze(block).unwrap();
            sy.synthesize(f.channel(0), &mut hop).unwrap();
            y.extend_from_slice(&hop);
        }
        for n in 0..y.len() - 64 {
            prop_assert!((y[n + 64] - x[n]).abs() < 1e-9);
        }
    }

    #[test]
    fn adm_beta_stays_in_range(f in signal(256..2048), b in signal(256..2048)) {
        let mut side = AdmSide::new(AdmConfig::default()).unwrap();
        for (x, y) in f.iter().zip(&b) {
            let out = side.step(*x, *y);
            prop_assert!(out.is_finite());
            prop_assert!((0.0..=1.0).contains(&side.beta()));
        }
    }
}
