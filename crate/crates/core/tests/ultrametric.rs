//! Lattice geometry against explicit p-adic integers.

mod common;

use common::{digits_to_int, valuation};
use padic_qft::ultrametric::*;

/// Distance exponent from the valuation of the difference of the cell
/// centres read as integers.
fn oracle_distance(a: &BallAddress, b: &BallAddress, p: u32) -> Distance {
    let x = digits_to_int(a.digits(), p) - digits_to_int(b.digits(), p);
    if x == 0 {
        Distance::Same
    } else {
        Distance::Exp(a.ambient_level() - valuation(x, i64::from(p)) as i32)
    }
}

#[test]
fn lattice_distances_match_valuations() {
    for p in [3u32, 5] {
        let region = Region::new(p, 2, 0, vec![vec![0, 1], vec![2, 2], vec![1, 0]]).unwrap();
        let lat = region.refine(-2).unwrap();
        assert_eq!(lat.len(), 3 * (p as usize).pow(2));
        for i in 0..lat.len() {
            for j in 0..lat.len() {
                let want = oracle_distance(lat.cell(i).unwrap(), lat.cell(j).unwrap(), p);
                assert_eq!(lat.distance(i, j).unwrap(), want);
            }
        }
    }
}

#[test]
fn refinement_counts_and_ownership() {
    let region = Region::new(3, 1, -1, vec![vec![0, 0], vec![2, 1]]).unwrap();
    for l in [-1, -2, -3] {
        let lat = region.refine(l).unwrap();
        assert_eq!(lat.len(), 2 * 3usize.pow((-1 - l) as u32));
        for i in 0..lat.len() {
            let owner = &region.balls()[lat.owner(i)];
            assert!(owner.contains(lat.cell(i).unwrap()));
        }
    }
}

#[test]
fn two_far_balls_refined_once() {
    // balls at distance 9 (k = 0, ambient 2), refined to l = -1
    let region = Region::new(3, 2, 0, vec![vec![0, 0], vec![1, 0]]).unwrap();
    let lat = region.refine(-1).unwrap();
    assert_eq!(lat.len(), 6);
    for i in 0..6 {
        for j in 0..6 {
            let d = lat.distance(i, j).unwrap();
            match (lat.owner(i) == lat.owner(j), i == j) {
                (_, true) => assert_eq!(d, Distance::Same),
                (true, false) => assert_eq!(d, Distance::Exp(0)),
                (false, _) => assert_eq!(d, Distance::Exp(2)),
            }
        }
    }
}

#[test]
fn complement_membership_matches_brute_force() {
    // every level-l offset y in the ambient ball: y ∉ R_i exactly when
    // x_i − y lands on a lattice cell
    let region = Region::new(3, 2, 0, vec![vec![0, 1], vec![2, 0]]).unwrap();
    let lat = region.refine(-1).unwrap();
    let root_cells = Region::new(3, 2, 2, vec![vec![]]).unwrap().refine(-1).unwrap();
    for i in 0..lat.len() {
        let x = digits_to_int(lat.cell(i).unwrap().digits(), 3);
        for y in root_cells.cells() {
            let yv = digits_to_int(y.digits(), 3);
            let inside = lat.cells().iter().any(|c| {
                // compare modulo 3^3 digit by digit (carry-free in F_3 per digit)
                let target: Vec<u32> = lat
                    .cell(i)
                    .unwrap()
                    .digits()
                    .iter()
                    .zip(y.digits())
                    .map(|(a, b)| (a + 3 - b) % 3)
                    .collect();
                c.digits() == target.as_slice()
            });
            assert_eq!(complement_membership(&lat, i, y).unwrap(), inside, "x={x} y={yv}");
            assert_eq!(translate_cell(&lat, i, y).unwrap().is_some(), inside);
        }
    }
}

#[test]
fn region_text_round_trips_for_large_q() {
    let region = Region::new(49, 1, -1, vec![vec![48, 0], vec![3, 17]]).unwrap();
    assert_eq!(Region::parse(&region.to_text(), 49).unwrap(), region);
}
