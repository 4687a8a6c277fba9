use chanest_core::linalg::{frobenius_sq, CMat, C64};
use chanest_core::linksim::*;
use chanest_core::rng::{complex_normal_matrix, seeded};
use statrs::function::erf::erfc;

fn q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Exact Gray 16-QAM bit error rate in AWGN at `es_n0` (linear), per axis
/// levels `{-3, -1, 1, 3} d`.
fn gray16_ber(es_n0: f64) -> f64 {
    let d = 1.0 / 10f64.sqrt();
    let s = (1.0 / (2.0 * es_n0)).sqrt();
    (3.0 * q(d / s) + 2.0 * q(3.0 * d / s) - q(5.0 * d / s)) / 4.0
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn constellations() {
    for (m, order) in [(Modulation::Qam16, 16), (Modulation::Qam64, 64)] {
        let map = ConstellationMap::new(m);
        let pts = map.points();
        assert_eq!(pts.len(), order);
        let energy = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        assert!((energy - 1.0).abs() < 1e-12);
        for i in 0..order {
            for j in 0..i {
                let dist = (pts[i] - pts[j]).norm();
                assert!(dist > 1e-9);
                // nearest neighbours along one axis differ in exactly one bit
                let min_step = 2.0 * (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
                if (dist - min_step).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1, "labels {i} and {j}");
                }
            }
        }
    }
}

#[test]
fn modulation_round_trip() {
    let bits: Vec<u8> = (0..6 * 500).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
    for m in [Modulation::Qam16, Modulation::Qam64] {
        let usable = &bits[..bits.len() / m.bits_per_symbol() * m.bits_per_symbol()];
        let syms = qam_mod(usable, m).unwrap();
        assert_eq!(qam_demod(&syms, m), usable);
    }
    assert!(qam_mod(&[1, 0, 1], Modulation::Qam16).is_err());
    assert!(qam_mod(&[1, 0, 2, 0], Modulation::Qam16).is_err());
}

#[test]
fn awgn_16qam_matches_the_gray_reference() {
    let es_n0_db = 10.0;
    let noise = 10f64.powf(-es_n0_db / 10.0);
    let h = CMat::from_element(1, 1, C64::new(1.0, 0.0));
    let cfg = LinkConfig::new(1, Modulation::Qam16, 1_000_000, noise, 5);
    let out = run_link(&h, &h, &cfg).unwrap();
    let p = gray16_ber(1.0 / noise);
    let se = (p * (1.0 - p) / out.num_bits as f64).sqrt();
    assert!((out.ber - p).abs() < 3.0 * se, "{} vs {p}", out.ber);
    assert!((p - 0.0589).abs() < 1e-3);
}

#[test]
fn svd_precoder_properties() {
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(0.5, 0.0),
        C64::new(3.0, 0.0),
        C64::new(1.0, 0.0),
    ]));
    let v = svd_precoder(&d, 3).unwrap();
    for (col, idx) in [1usize, 2, 0].iter().enumerate() {
        assert!((v[(*idx, col)].norm() - 1.0).abs() < 1e-12);
    }

    let h = complex_normal_matrix(&mut seeded(1), 6, 8, 1.0);
    let v = svd_precoder(&h, 4).unwrap();
    assert!((v.adjoint() * &v - CMat::identity(4, 4)).norm() < 1e-9);
    let sv_full = h.clone().singular_values();
    let mut top: Vec<f64> = sv_full.iter().copied().collect();
    top.sort_by(|a, b| b.total_cmp(a));
    let mut eff: Vec<f64> = (&h * &v).singular_values().iter().copied().collect();
    eff.sort_by(|a, b| b.total_cmp(a));
    for k in 0..4 {
        assert!((eff[k] - top[k]).abs() < 1e-9);
    }
    assert!(svd_precoder(&CMat::zeros(3, 3), 1).is_err());
    assert!(svd_precoder(&h, 7).is_err());
}

#[test]
fn transmit_examples() {
    let mut rng = seeded(2);
    let h = complex_normal_matrix(&mut rng, 4, 6, 1.0);
    let v = svd_precoder(&h, 2).unwrap();
    let x = complex_normal_matrix(&mut rng, 2, 10, 1.0);
    assert_eq!(transmit(&h, &v, &x, 0.0, &mut rng).unwrap(), &h * &v * &x);

    let y = transmit(&h, &v, &CMat::zeros(2, 50_000), 0.3, &mut rng).unwrap();
    let var = frobenius_sq(&y) / y.len() as f64;
    assert!((var - 0.3).abs() < 0.02 * 0.3);

    let x2 = complex_normal_matrix(&mut rng, 2, 10, 1.0);
    let a = transmit(&h, &v, &(&x + &x2), 0.5, &mut seeded(9)).unwrap();
    let b = transmit(&h, &v, &x, 0.5, &mut seeded(9)).unwrap();
    let c = transmit(&h, &v, &x2, 0.0, &mut seeded(9)).unwrap();
    assert!((a - b - c).norm() < 1e-12);
    assert!(transmit(&h, &CMat::zeros(5, 2), &x, 0.0, &mut rng).is_err());
}

#[test]
fn lmmse_examples() {
    let mut rng = seeded(3);
    let h = complex_normal_matrix(&mut rng, 6, 6, 1.0);
    let v = svd_precoder(&h, 3).unwrap();
    let x = complex_normal_matrix(&mut rng, 3, 20, 1.0);
    let y = &h * &v * &x;
    assert!((lmmse_equalize(&y, &h, &v, 1e-12).unwrap() - &x).norm() < 1e-6);
    assert!(lmmse_equalize(&y, &h, &v, 1e15).unwrap().norm() < 1e-9);

    // independent solve: LU on the normal equations
    let g = &h * &v;
    let reg = 0.37;
    let normal = g.adjoint() * &g + CMat::identity(3, 3) * C64::new(reg, 0.0);
    let want = normal.lu().solve(&(g.adjoint() * &y)).unwrap();
    assert!((lmmse_equalize(&y, &h, &v, reg).unwrap() - want).norm() < 1e-10);
}

#[test]
fn perfect_csi_noiseless_link_is_error_free() {
    let h = complex_normal_matrix(&mut seeded(4), 8, 32, 1.0);
    for m in [Modulation::Qam16, Modulation::Qam64] {
        let out = run_link(&h, &h, &LinkConfig::new(4, m, 2_000, 0.0, 1)).unwrap();
        assert_eq!(out.bit_errors, 0);
        assert_eq!(out.num_bits, 4 * 2_000 * m.bits_per_symbol() as u64);
    }
}

#[test]
fn link_orderings() {
    let noise = 10f64.powf(-1.8);
    let mut perfect = vec![];
    let mut random = vec![];
    for t in 0..100u64 {
        let h = complex_normal_matrix(&mut seeded(100 + t), 4, 8, 1.0);
        let other = complex_normal_matrix(&mut seeded(900 + t), 4, 8, 1.0);
        let cfg = LinkConfig::new(2, Modulation::Qam16, 200, noise, t);
        perfect.push(run_link(&h, &h, &cfg).unwrap().ber);
        random.push(run_link(&h, &other, &cfg).unwrap().ber);
    }
    assert!(median(random) >= median(perfect.clone()));

    // perfect-CSI BER falls with SNR, and 64-QAM is worse than 16-QAM
    let mut last = f64::INFINITY;
    for es_n0_db in [5.0, 10.0, 15.0, 20.0] {
        let noise = 10f64.powf(-es_n0_db / 10.0);
        let mut b16 = vec![];
        let mut b64 = vec![];
        for t in 0..21u64 {
            let h = complex_normal_matrix(&mut seeded(200 + t), 4, 8, 1.0);
            b16.push(run_link(&h, &h, &LinkConfig::new(2, Modulation::Qam16, 300, noise, t)).unwrap().ber);
            b64.push(run_link(&h, &h, &LinkConfig::new(2, Modulation::Qam64, 300, noise, t)).unwrap().ber);
        }
        let (m16, m64) = (median(b16), median(b64));
        assert!(m16 <= last);
        assert!(m64 >= m16);
        last = m16;
    }
}

#[test]
fn link_is_deterministic() {
    let h = complex_normal_matrix(&mut seeded(5), 4, 8, 1.0);
    let est = &h + complex_normal_matrix(&mut seeded(6), 4, 8, 0.01);
    let cfg = LinkConfig::new(2, Modulation::Qam64, 500, 0.01, 17);
    assert_eq!(run_link(&h, &est, &cfg).unwrap(), run_link(&h, &est, &cfg).unwrap());
}
