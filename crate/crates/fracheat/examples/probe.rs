// probe: alpha=0.5 r=1 radial integral accuracy
use fracheat::quad::{adaptive, oscillatory_integral, Oscillator};
fn main() {
    let g = |rho: f64| if rho <= 0.0 { 0.0 } else { (-(rho.sqrt())).exp() };
    let want = 0.08610714370237274 * std::f64::consts::PI;
    for tol in [1e-8, 1e-9, 1e-10, 1e-11, 1e-12] {
        let res = oscillatory_integral(&g, Oscillator::Cos, 1.0, 2000.0, tol);
        println!("tol={tol:.0e} val={:.15} err_claim={:.2e} panels={} true_err={:.2e}",
                 res.value, res.abs_error, res.panels, (res.value - want).abs());
    }
    // head alone on [0, pi/2]
    for tol in [1e-9, 1e-12, 1e-14] {
        let head = adaptive(&|rho: f64| g(rho) * rho.cos(), 0.0, std::f64::consts::FRAC_PI_2, tol);
        println!("head tol={tol:.0e} -> {head:.16}");
    }
}
