use fastjl::dataset::{read_vectors, write_vectors_as, VectorDataset, VectorFormat};
use fastjl::sparsity::{choose_k, q_theorem1, Budget};
use fastjl::transform::{count_nnz, fwht_inplace, sample_projection, SignDiagonal};
use fastjl::{Embedder, FastJl, JlParams};
use proptest::prelude::*;

fn vec_of(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, d)
}

fn pow2_vec() -> impl Strategy<Value = Vec<f64>> {
    (0u32..=10).prop_flat_map(|p| vec_of(1 << p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fwht_is_an_involution(x in pow2_vec()) {
        let mut y = x.clone();
        fwht_inplace(&mut y).unwrap();
        fwht_inplace(&mut y).unwrap();
        for (a, b) in y.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn hd_preserves_norm(x in pow2_vec(), seed in any::<u64>()) {
        let signs = SignDiagonal::sample(x.len(), seed);
        let mut y = x.clone();
        signs.apply_inplace(&mut y).unwrap();
        fwht_inplace(&mut y).unwrap();
        let (nx, ny) = (x.iter().map(|v| v * v).sum::<f64>(), y.iter().map(|v| v * v).sum::<f64>());
        prop_assert!((nx - ny).abs() <= 1e-9 * (1.0 + nx));
    }

    #[test]
    fn embedding_is_linear(
        (x, y) in (vec_of(64), vec_of(64)),
        a in -10.0f64..10.0,
        q in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let op = FastJl::sample(&JlParams::new(64, 8, 0.5, q, seed).unwrap()).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let (ex, ey, ec) = (op.embed(&x).unwrap(), op.embed(&y).unwrap(), op.embed(&combo).unwrap());
        for i in 0..8 {
            let want = a * ex.values[i] + ey.values[i];
            prop_assert!((ec.values[i] - want).abs() <= 1e-8 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn projection_rows_are_sorted_and_in_range(k in 1usize..16, p in 0u32..8, q in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = 1usize << p;
        let proj = sample_projection(k, d, q, seed).unwrap();
        let mut total = 0;
        for i in 0..k {
            let cols: Vec<usize> = proj.row(i).map(|(c, _)| c).collect();
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(cols.iter().all(|&c| c < d));
            total += cols.len();
        }
        prop_assert_eq!(total, count_nnz(&proj));
        if q == 1.0 {
            prop_assert_eq!(total, k * d);
        }
    }

    #[test]
    fn sparsity_is_a_probability(eps in 0.001f64..0.999, n in 2.0f64..1e12, p in 0u32..24) {
        let q = q_theorem1(eps, n, 1 << p, 1.0).unwrap();
        prop_assert!(q > 0.0 && q <= 1.0);
        prop_assert!(q <= eps.max(2f64.powi(-32)));
        let k = choose_k(eps, Budget::Points(n), 1.0).unwrap();
        prop_assert!(k as f64 >= n.ln() / (eps * eps));
    }

    #[test]
    fn datasets_round_trip_bit_exactly(
        rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 5), 1..6),
        csv in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let (path, fmt) = if csv {
            (dir.path().join("v.csv"), VectorFormat::Csv)
        } else {
            (dir.path().join("v.fjlv"), VectorFormat::Binary)
        };
        let ds = VectorDataset::new(5, rows.clone(), "mem").unwrap();
        write_vectors_as(&path, &ds, fmt).unwrap();
        let back = read_vectors(&path).unwrap();
        prop_assert_eq!(back.d, 5);
        for (a, b) in back.vectors.iter().zip(&rows) {
            for (u, v) in a.iter().zip(b) {
                prop_assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }
}
