mod common;

use common::*;
use pcrrr::penalty::DEFAULT_RANK_TOLERANCE;
use pcrrr::{build_penalty, build_penalty_set, group_svd, DataPair, Error, GroupPartition, Matrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn block(seed: u64, n: usize, p: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // unequal column scales so the spectrum is not flat
    let mut x = normal(&mut rng, n, p);
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col *= 1.0 + j as f64;
    }
    x
}

fn penalty_of(x: &Matrix) -> Matrix {
    build_penalty(&group_svd(x, DEFAULT_RANK_TOLERANCE).unwrap())
}

fn scale(x: &Matrix) -> f64 {
    x.norm_squared().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn psd_and_symmetric(seed in any::<u64>(), n in 1usize..12, p in 1usize..7) {
        let x = block(seed, n, p);
        let a = penalty_of(&x);
        prop_assert_eq!(&a, &a.transpose());
        let min_eig = a.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-10 * scale(&x));
    }

    #[test]
    fn leading_direction_is_free(seed in any::<u64>(), n in 1usize..12, p in 1usize..7) {
        let x = block(seed, n, p);
        let s = group_svd(&x, DEFAULT_RANK_TOLERANCE).unwrap();
        let a = build_penalty(&s);
        let r1 = s.right_vectors().column(0);
        prop_assert!((&a * r1).norm() <= 1e-10 * scale(&x));
        prop_assert_eq!(s.gaps()[0], 0.0);
    }

    #[test]
    fn quadratic_form_identity(seed in any::<u64>(), n in 1usize..12, p in 1usize..7) {
        let x = block(seed, n, p);
        let s = group_svd(&x, DEFAULT_RANK_TOLERANCE).unwrap();
        let a = build_penalty(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let c = normal(&mut rng, p, 1);
        let lhs = (c.transpose() * &a * &c)[(0, 0)];
        let proj = s.right_vectors().tr_mul(&c);
        let rhs: f64 = s.gaps().iter().zip(proj.iter()).map(|(g, v)| g * v * v).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + rhs.abs()));
    }

    #[test]
    fn invariant_to_row_rotation(seed in any::<u64>(), n in 2usize..10, p in 1usize..6) {
        let x = block(seed, n, p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let o = random_orthonormal(&mut rng, n, n);
        let diff = (penalty_of(&(&o * &x)) - penalty_of(&x)).norm();
        prop_assert!(diff <= 1e-8 * scale(&x));
    }

    #[test]
    fn column_sign_flip_conjugates(seed in any::<u64>(), n in 2usize..10, p in 1usize..6) {
        let x = block(seed, n, p);
        let j = (seed % p as u64) as usize;
        let mut flipped = x.clone();
        flipped.column_mut(j).neg_mut();
        let mut signs = Matrix::identity(p, p);
        signs[(j, j)] = -1.0;
        let expected = &signs * penalty_of(&x) * &signs;
        prop_assert!((penalty_of(&flipped) - expected).norm() <= 1e-8 * scale(&x));
    }
}

#[test]
fn two_group_set_is_block_diagonal_in_effect() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = normal(&mut rng, 15, 5);
    let data = DataPair::new(x.clone(), normal(&mut rng, 15, 2)).unwrap();
    let groups = GroupPartition::new(vec![1, 0, 1, 0, 1]).unwrap();
    let set = build_penalty_set(&data, &groups, DEFAULT_RANK_TOLERANCE).unwrap();
    assert_eq!(set.num_groups(), 2);
    let a1 = penalty_of(&x.select_columns(&[1, 3]));
    assert!((set.matrix(0) - &a1).norm() < 1e-12);
    assert_eq!(set.diagonal()[3], a1[(1, 1)]);
}

#[test]
fn zero_group_is_reported_by_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut x = normal(&mut rng, 10, 4);
    x.column_mut(2).fill(0.0);
    x.column_mut(3).fill(0.0);
    let data = DataPair::new(x, normal(&mut rng, 10, 2)).unwrap();
    let groups = GroupPartition::contiguous(&[2, 2]).unwrap();
    assert_eq!(
        build_penalty_set(&data, &groups, DEFAULT_RANK_TOLERANCE),
        Err(Error::AllZeroBlock { group: 1 })
    );
}
