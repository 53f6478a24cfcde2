//! Recomputes the trace-distance constant on the calibration seed family.

use commutant::approx::DOMEGA_CONSTANT;
use commutant::harness::sweep::{calibrate_domega_constant, calibration_recipes};
use commutant::Tolerances;

fn main() {
    let recipes = calibration_recipes();
    let observed = calibrate_domega_constant(&recipes, &Tolerances::default());
    println!("instances:           {}", recipes.len());
    println!("max (dOmega - 2 Delta_eps) / eps^(1/4): {observed:.4}");
    println!("1.5x, rounded up:    {}", (1.5 * observed).ceil());
    println!("frozen constant:     {DOMEGA_CONSTANT}");
}
