//! Ball addresses, distances, refinement and the text format for regions.

use padic_qft::ultrametric::{distance, BallAddress, Region};

fn main() -> padic_qft::Result<()> {
    // Balls of radius 1 inside the ball of radius 9 over Q_3.
    let a = BallAddress::new(3, 2, 0, vec![0, 1])?;
    let b = BallAddress::new(3, 2, 0, vec![0, 2])?;
    let c = BallAddress::new(3, 2, 0, vec![2, 2])?;
    println!("d(a, b) = q^{}", distance(&a, &b)?);
    println!("d(a, c) = q^{}", distance(&a, &c)?);
    println!("d(b, c) = q^{}", distance(&b, &c)?);
    println!("a has measure {}", a.measure(3));

    let region = Region::new(3, 2, 0, vec![vec![0, 1], vec![0, 2], vec![2, 2]])?;
    let text = region.to_text();
    println!("region as text: {text}");
    assert_eq!(Region::parse(&text, 3)?, region);

    let lattice = region.refine(-1)?;
    println!("refined to level -1: {} cells", lattice.len());
    for i in [0, 1, 3] {
        println!(
            "  cell {i}: digits {:?}, owner ball {}",
            lattice.cell(i)?.digits(),
            lattice.owner(i)
        );
    }
    println!("cells 0 and 1 are q^{} apart", lattice.distance(0, 1)?);
    println!("cells 0 and 3 are q^{} apart", lattice.distance(0, 3)?);
    Ok(())
}
