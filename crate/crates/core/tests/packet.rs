use fscinfo::packet::{average_packets, ccc_fourier, ccc_real, channel_throughput, estimate_bandwidth, CccMode};
use fscinfo::{pic_fourier, pic_real, Packet64};
use proptest::prelude::*;

fn packet(xs: Vec<f64>) -> Packet64 {
    Packet64::new(xs, 0.5).unwrap()
}

proptest! {
    #[test]
    fn correlation_routes_agree(
        xs in prop::collection::vec(-10.0f64..10.0, 8..200),
        seed in -1.0f64..1.0,
        centred in any::<bool>(),
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, &x)| seed * x + (i as f64 * 0.7).sin()).collect();
        let mode = if centred { CccMode::Centered } else { CccMode::Literal };
        let (p, q) = (packet(xs), packet(ys));
        let r = ccc_real(&p, &q, mode).unwrap();
        let f = ccc_fourier(&p, &q, mode).unwrap();
        prop_assert!((r.value - f.value).abs() < 1e-9);
        prop_assert!(f.imaginary_residual.abs() < 1e-9);
        let l = p.extent();
        let (pr, pf) = (pic_real(&p, &q, l, mode).unwrap(), pic_fourier(&p, &q, l, mode).unwrap());
        prop_assert!((pr.bits - pf.bits).abs() < 1e-9 * (1.0 + pr.bits.abs()));
    }
}

#[test]
fn identical_packets_saturate() {
    let p = packet((0..64).map(|i| (i as f64 * 0.3).sin()).collect());
    let pic = pic_real(&p, &p, 10.0, CccMode::Literal).unwrap();
    assert!(pic.saturated);
    assert!((pic.correlation - 1.0).abs() < 1e-12);
}

#[test]
fn averaging_and_throughput() {
    let a = packet(vec![1.0; 16]);
    let b = packet(vec![3.0; 16]);
    let m = average_packets(&[a, b]).unwrap();
    assert!(m.samples().iter().all(|&x| x == 2.0));
    assert_eq!(channel_throughput(2.5, 4.0).unwrap(), 10.0);
}

#[test]
fn bandwidth_of_a_pure_tone() {
    let n = 256;
    let p = Packet64::new((0..n).map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / n as f64).cos()).collect(), 1.0)
        .unwrap();
    let b = estimate_bandwidth(&p, 0.99).unwrap();
    assert!(!b.dc_only);
    assert!((b.bandwidth - 10.0 / n as f64).abs() < 1.5 / n as f64, "{}", b.bandwidth);
}
