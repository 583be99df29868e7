//! Adaptive Gauss–Kronrod (7/15) quadrature.

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

/// Kronrod estimate and error estimate on `[a, b]`.
pub fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
/// Panels longer than `max_panel` are split before any error test.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_panel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    recurse(f, a, b, tol, max_panel, 0)
}

fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_panel: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    if b - a > max_panel && depth < MAX_DEPTH {
        return recurse(f, a, mid, 0.5 * tol, max_panel, depth + 1)
            + recurse(f, mid, b, 0.5 * tol, max_panel, depth + 1);
    }
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return val;
    }
    recurse(f, a, mid, 0.5 * tol, max_panel, depth + 1) + recurse(f, mid, b, 0.5 * tol, max_panel, depth + 1)
}

/// Integral over `[0, end]` on geometrically growing panels starting at
/// `first`; suits integrands that decay exponentially over many scales.
pub fn integrate_geometric(f: &impl Fn(f64) -> f64, end: f64, first: f64, max_panel: f64, tol: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = 0.0;
    let mut width = first.min(end);
    let mut panels = 0u32;
    while lo < end {
        let hi = if panels > 200 { end } else { (lo + width).min(end) };
        acc += integrate(f, lo, hi, tol, max_panel);
        lo = hi;
        width *= 2.0;
        panels += 1;
    }
    acc
}
