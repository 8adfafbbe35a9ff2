use levysup::process::ProcessSpec;
use levysup::quad::*;
fn main() {
    let s = ProcessSpec::subordinator_minus_drift(0.5, 1.0, 1.0).unwrap();
    let t = 1.0; let x = -0.5f64;
    let f = |xi: f64| {
        let psi = s.char_exponent(xi);
        let phase = -xi * x - t * psi.im;
        (-t * psi.re).exp() * phase.cos()
    };
    // manual composite on log-ish grid
    for (a, b, n) in [(0.0, 1.0, 64), (1.0, 10.0, 128), (10.0, 100.0, 256), (100.0, 1000.0, 512), (1000.0, 3100.0, 512)] {
        let bp = linear_breakpoints(a, b, n);
        let r = composite(&f, &bp);
        println!("[{a},{b}] n={n}: val={:.10e} err={:.3e}", r.value, r.abs_err);
        let bp2 = linear_breakpoints(a, b, 2*n);
        let r2 = composite(&f, &bp2);
        println!("      refined: val={:.10e} err={:.3e} diff={:.3e}", r2.value, r2.abs_err, (r2.value - r.value).abs());
    }
}
