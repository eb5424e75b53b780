//! M/M/1 queue with catastrophes: stationary law, first-visit moments and a transient law.

use catabird::analysis::{catastrophe_mean, first_visit_stats, stationary_distribution};
use catabird::montecarlo::estimate_first_visit;
use catabird::transient::{transient_cat, Route};
use catabird::{ProcessSpecF64, TruncationWindowF64};

fn main() -> Result<(), catabird::Error> {
    // birth 1, death 1 above the floor 0, catastrophe rate 1
    let spec = ProcessSpecF64::from_fns(0, |_| 1.0, |_| 1.0, 1.0);
    let window = TruncationWindowF64::new(64, 1e-10)?;

    let st = stationary_distribution(&spec, &window)?;
    println!("q_0 = {:.10}  residual = {:.1e}", st.q[0], st.residual);

    let fv = first_visit_stats(&spec, 1, 0, &window)?;
    println!("E T(1,0) = {:.10}  Var = {:.10}", fv.mean, fv.variance);
    println!("E C(1,0) = {:.10}", catastrophe_mean(&spec, 1, &window)?);

    let p = transient_cat(&spec, 3, 2.0, &window, 1e-10, Route::Decomposition)?;
    println!("P(N(2) = 0 | N(0) = 3) = {:.10}", p.mass[0]);

    let mc = estimate_first_visit(&spec, 1, 0, 100_000, 42)?;
    println!("MC E T(1,0) = {:.4} +- {:.4}", mc.summary.mean, mc.summary.se_mean);
    Ok(())
}
