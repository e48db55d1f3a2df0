//! The bounded-variable simplex solver on a small problem with every row
//! type.

use dprmp::decoy::{lp_solve, LpProblem, Relation, Sense};

fn main() -> dprmp::Result<()> {
    // maximize 3x + 2y + z
    let mut lp = LpProblem::unit_box(Sense::Maximize, vec![3.0, 2.0, 1.0]);
    lp.bounds[2] = (0.0, 4.0);
    lp.push(vec![1.0, 1.0, 1.0], Relation::Le(2.5));
    lp.push(vec![1.0, -1.0, 0.0], Relation::Ge(-0.5));
    lp.push(vec![0.0, 1.0, 2.0], Relation::Range(0.5, 3.0));
    lp.push(vec![1.0, 0.0, 1.0], Relation::Eq(1.75));
    let sol = lp_solve(&lp)?;
    println!("max = {:.6} at x = {:?}", sol.value, sol.x);

    lp.sense = Sense::Minimize;
    let sol = lp_solve(&lp)?;
    println!("min = {:.6} at x = {:?}", sol.value, sol.x);

    lp.push(vec![1.0, 1.0, 1.0], Relation::Ge(10.0));
    match lp_solve(&lp) {
        Err(e) => println!("with x + y + z >= 10: {e}"),
        Ok(s) => println!("unexpected solution {:?}", s.x),
    }
    Ok(())
}
