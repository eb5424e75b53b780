//! Process specifications, truncation windows and truncated generators.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{ModelError, Result};
use crate::scalar::Real;

pub type RateFn<T> = Arc<dyn Fn(usize) -> T + Send + Sync>;
pub type TimeRateFn<T> = Arc<dyn Fn(usize, T) -> T + Send + Sync>;
pub type IntensityFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// How tabulated rates continue past the last table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    /// Repeat the last value.
    Hold,
    /// Continue the last increment.
    Linear,
}

fn extrapolate<T: Real>(table: &[T], i: usize, rule: Extrapolation) -> T {
    if i < table.len() {
        return table[i];
    }
    let last = table[table.len() - 1];
    match rule {
        Extrapolation::Hold => last,
        Extrapolation::Linear if table.len() >= 2 => {
            let step = last - table[table.len() - 2];
            last + step * T::from_usize_lossy(i + 1 - table.len())
        }
        Extrapolation::Linear => last,
    }
}

/// Time-homogeneous birth-death process with total catastrophes on `{r, r+1, ...}`.
///
/// `xi = 0` gives the process without catastrophes.
#[derive(Clone)]
pub struct ProcessSpec<T = f64> {
    pub r: usize,
    pub xi: T,
    birth: RateFn<T>,
    death: RateFn<T>,
}

impl<T: Real> ProcessSpec<T> {
    pub fn new(r: usize, birth: RateFn<T>, death: RateFn<T>, xi: T) -> Self {
        Self { r, xi, birth, death }
    }

    pub fn from_fns<B, D>(r: usize, birth: B, death: D, xi: T) -> Self
    where
        B: Fn(usize) -> T + Send + Sync + 'static,
        D: Fn(usize) -> T + Send + Sync + 'static,
    {
        Self::new(r, Arc::new(birth), Arc::new(death), xi)
    }

    /// Builds a spec from rate tables: `births[i]` is the birth rate at `r + i`,
    /// `deaths[i]` the death rate at `r + 1 + i`.
    pub fn from_tables(
        r: usize,
        births: Vec<T>,
        deaths: Vec<T>,
        xi: T,
        rule: Extrapolation,
    ) -> Result<Self, ModelError> {
        if births.is_empty() || deaths.is_empty() {
            return Err(ModelError::BadParameter {
                preset: "table".into(),
                param: if births.is_empty() { "birth" } else { "death" }.into(),
                problem: "must hold at least one entry".into(),
            });
        }
        let b = Arc::new(births);
        let d = Arc::new(deaths);
        Ok(Self::from_fns(
            r,
            move |n| extrapolate(&b, n - r, rule),
            move |n| extrapolate(&d, n - r - 1, rule),
            xi,
        ))
    }

    /// Birth rate α_n; callers must pass `n >= r`.
    #[inline]
    pub fn birth(&self, n: usize) -> T {
        (self.birth)(n)
    }

    /// Death rate β_n, zero at the floor.
    #[inline]
    pub fn death(&self, n: usize) -> T {
        if n <= self.r {
            T::zero()
        } else {
            (self.death)(n)
        }
    }

    pub fn with_xi(&self, xi: T) -> Self {
        Self {
            xi,
            ..self.clone()
        }
    }

    /// The same rates without catastrophes.
    pub fn hat(&self) -> Self {
        self.with_xi(T::zero())
    }
}

impl<T: Real> fmt::Debug for ProcessSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.r;
        f.debug_struct("ProcessSpec")
            .field("r", &r)
            .field("xi", &self.xi)
            .field("birth[r..r+3]", &[self.birth(r), self.birth(r + 1), self.birth(r + 2)])
            .field("death[r+1..r+4]", &[self.death(r + 1), self.death(r + 2), self.death(r + 3)])
            .finish()
    }
}

/// Time-varying birth-death process with catastrophe intensity ξ(t), started at `t0`.
#[derive(Clone)]
pub struct TimeVaryingSpec<T = f64> {
    pub r: usize,
    pub t0: T,
    birth: TimeRateFn<T>,
    death: TimeRateFn<T>,
    xi: IntensityFn<T>,
    /// Upper bound of α_n(t) + β_n(t) + ξ(t) over t ≥ t0, used for thinning.
    rate_bound: RateFn<T>,
}

impl<T: Real> TimeVaryingSpec<T> {
    pub fn new(
        r: usize,
        t0: T,
        birth: TimeRateFn<T>,
        death: TimeRateFn<T>,
        xi: IntensityFn<T>,
        rate_bound: RateFn<T>,
    ) -> Self {
        Self {
            r,
            t0,
            birth,
            death,
            xi,
            rate_bound,
        }
    }

    /// Embeds a homogeneous spec; ξ(t) is constant.
    pub fn from_homogeneous(spec: &ProcessSpec<T>, t0: T) -> Self {
        let (b, d, x) = (spec.clone(), spec.clone(), spec.xi);
        let bound = spec.clone();
        Self::new(
            spec.r,
            t0,
            Arc::new(move |n, _| b.birth(n)),
            Arc::new(move |n, _| d.death(n)),
            Arc::new(move |_| x),
            Arc::new(move |n| bound.birth(n) + bound.death(n) + x),
        )
    }

    #[inline]
    pub fn birth(&self, n: usize, t: T) -> T {
        (self.birth)(n, t)
    }

    #[inline]
    pub fn death(&self, n: usize, t: T) -> T {
        if n <= self.r {
            T::zero()
        } else {
            (self.death)(n, t)
        }
    }

    #[inline]
    pub fn xi(&self, t: T) -> T {
        (self.xi)(t)
    }

    #[inline]
    pub fn rate_bound(&self, n: usize) -> T {
        (self.rate_bound)(n)
    }

    /// The same birth and death rates with ξ(t) ≡ 0.
    pub fn hat(&self) -> Self {
        let rb = self.rate_bound.clone();
        Self {
            xi: Arc::new(|_| T::zero()),
            rate_bound: rb,
            ..self.clone()
        }
    }

    pub fn with_t0(&self, t0: T) -> Self {
        Self { t0, ..self.clone() }
    }
}

impl<T: Real> fmt::Debug for TimeVaryingSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeVaryingSpec")
            .field("r", &self.r)
            .field("t0", &self.t0)
            .field("xi(t0)", &self.xi(self.t0))
            .finish_non_exhaustive()
    }
}

/// Finite window `{r, ..., r + upper}` with a tail-mass budget.
///
/// When `adaptive` is set, engines double `upper` until the mass in the upper half
/// of the window drops below `tail_tol / 10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWindow<T = f64> {
    pub upper: usize,
    pub tail_tol: T,
    pub adaptive: bool,
}

pub const MAX_WINDOW: usize = 1 << 16;

impl<T: Real> TruncationWindow<T> {
    pub fn new(upper: usize, tail_tol: T) -> Result<Self, ModelError> {
        if upper < 2 {
            return Err(ModelError::WindowTooSmall(upper));
        }
        Ok(Self {
            upper,
            tail_tol,
            adaptive: true,
        })
    }

    /// A window that is used as given, without doubling.
    pub fn fixed(upper: usize, tail_tol: T) -> Result<Self, ModelError> {
        Ok(Self {
            adaptive: false,
            ..Self::new(upper, tail_tol)?
        })
    }

    pub fn with_upper(self, upper: usize) -> Self {
        Self { upper, ..self }
    }

    pub fn dim(&self) -> usize {
        self.upper + 1
    }

    /// Index of state `n` inside a window with floor `r`.
    pub fn index(&self, r: usize, n: usize) -> Result<usize, ModelError> {
        if n < r {
            return Err(ModelError::BelowFloor { state: n, floor: r });
        }
        if n - r > self.upper {
            return Err(ModelError::StateOutsideWindow {
                state: n,
                lo: r,
                hi: r + self.upper,
            });
        }
        Ok(n - r)
    }

    /// Smallest window (by doubling) that keeps `n` in its lower half.
    pub fn covering(self, r: usize, n: usize) -> Self {
        let mut w = self;
        while n >= r && (n - r) * 2 > w.upper && w.adaptive && w.upper < MAX_WINDOW {
            w.upper *= 2;
        }
        if n >= r && n - r > w.upper {
            w.upper = n - r + 2;
        }
        w
    }
}

impl Default for TruncationWindow<f64> {
    fn default() -> Self {
        Self {
            upper: 64,
            tail_tol: 1e-10,
            adaptive: true,
        }
    }
}

/// Which chain a truncated generator describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorVariant {
    /// Birth, death and catastrophe transitions of the spec.
    WithCatastrophes,
    /// Birth and death only.
    Hat,
    /// The spec's transitions with state `k` made absorbing.
    TabooAbsorbing(usize),
    /// Catastrophes from `n > r` go to an absorbing cemetery stored at index 0.
    ModifiedM,
}

/// Truncated generator on a window, stored as nearest-neighbour rates plus one jump column.
///
/// Index `i` is state `r + i`, except for [`GeneratorVariant::ModifiedM`] where index 0 is
/// the cemetery and index `i ≥ 1` is state `r + i - 1`.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    pub variant: GeneratorVariant,
    pub r: usize,
    pub up: Vec<T>,
    pub down: Vec<T>,
    pub jump: Vec<T>,
    pub jump_target: usize,
    pub diag: Vec<T>,
}

impl<T: Real> Generator<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Offset between index and state: `state = r + index - offset`.
    pub fn offset(&self) -> usize {
        usize::from(self.variant == GeneratorVariant::ModifiedM)
    }

    pub fn index_of(&self, n: usize) -> usize {
        n - self.r + self.offset()
    }

    /// `out = v · Q`.
    pub fn left_mul(&self, v: &[T], out: &mut [T]) {
        let d = self.dim();
        for i in 0..d {
            out[i] = v[i] * self.diag[i];
        }
        for i in 0..d {
            let vi = v[i];
            if vi == T::zero() {
                continue;
            }
            if i + 1 < d {
                out[i + 1] = out[i + 1] + vi * self.up[i];
            }
            if i > 0 {
                out[i - 1] = out[i - 1] + vi * self.down[i];
            }
            out[self.jump_target] = out[self.jump_target] + vi * self.jump[i];
        }
    }

    /// Off-diagonal entries of row `i` merged by target, plus the diagonal.
    pub fn row(&self, i: usize) -> (BTreeMap<usize, T>, T) {
        let mut m = BTreeMap::new();
        let mut put = |j: usize, v: T| {
            if v != T::zero() {
                let e = m.entry(j).or_insert(T::zero());
                *e = *e + v;
            }
        };
        if i + 1 < self.dim() {
            put(i + 1, self.up[i]);
        }
        if i > 0 {
            put(i - 1, self.down[i]);
        }
        put(self.jump_target, self.jump[i]);
        (m, self.diag[i])
    }

    /// Largest exit rate, the uniformization constant.
    pub fn max_exit_rate(&self) -> T {
        self.diag.iter().fold(T::zero(), |m, d| m.max(d.abs()))
    }
}

/// Non-fatal findings of [`validate_spec`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn suspected_explosive(&self) -> bool {
        self.warnings.iter().any(|w| w.contains("explosive"))
    }
}

/// Checks rate invariants over the window and flags suspected explosiveness.
pub fn validate_spec<T: Real>(
    spec: &ProcessSpec<T>,
    window: &TruncationWindow<T>,
) -> Result<ValidationReport, ModelError> {
    if window.upper < 2 {
        return Err(ModelError::WindowTooSmall(window.upper));
    }
    if !spec.xi.is_finite() || spec.xi < T::zero() {
        return Err(ModelError::InvalidCatastrophe(spec.xi.as_f64()));
    }
    let r = spec.r;
    let mut inv_sum = Vec::with_capacity(window.dim());
    let mut acc = T::zero();
    for n in r..=r + window.upper {
        let a = spec.birth(n);
        if !(a.is_finite() && a > T::zero()) {
            return Err(ModelError::InvalidRate {
                rate: "birth",
                state: n,
                value: a.as_f64(),
            });
        }
        if n > r {
            let b = spec.death(n);
            if !(b.is_finite() && b >= T::zero()) {
                return Err(ModelError::InvalidRate {
                    rate: "death",
                    state: n,
                    value: b.as_f64(),
                });
            }
        }
        acc = acc + a.recip();
        inv_sum.push(acc);
    }
    let mut report = ValidationReport::default();
    let half = inv_sum[window.upper / 2];
    let tail_share = (acc - half) / acc;
    if tail_share < T::lit(0.02) {
        report.warnings.push(format!(
            "suspected explosive: sum of 1/birth over the upper half of the window is {:.3e} of the total",
            tail_share.as_f64()
        ));
    }
    Ok(report)
}

/// Builds the truncated generator with a reflecting top (birth rate at `r + upper` zeroed).
pub fn truncated_generator<T: Real>(
    spec: &ProcessSpec<T>,
    window: &TruncationWindow<T>,
    variant: GeneratorVariant,
) -> Result<Generator<T>, ModelError> {
    if window.upper < 2 {
        return Err(ModelError::WindowTooSmall(window.upper));
    }
    let r = spec.r;
    let xi = match variant {
        GeneratorVariant::Hat => T::zero(),
        _ => spec.xi,
    };
    let offset = usize::from(variant == GeneratorVariant::ModifiedM);
    let d = window.dim() + offset;
    let mut up = vec![T::zero(); d];
    let mut down = vec![T::zero(); d];
    let mut jump = vec![T::zero(); d];
    for i in offset..d {
        let n = r + i - offset;
        if n < r + window.upper {
            up[i] = spec.birth(n);
        }
        if n > r {
            down[i] = spec.death(n);
            jump[i] = xi;
        }
    }
    if let GeneratorVariant::TabooAbsorbing(k) = variant {
        let ki = window.index(r, k)?;
        up[ki] = T::zero();
        down[ki] = T::zero();
        jump[ki] = T::zero();
    }
    let diag = (0..d).map(|i| -(up[i] + down[i] + jump[i])).collect();
    Ok(Generator {
        variant,
        r,
        up,
        down,
        jump,
        jump_target: 0,
        diag,
    })
}

/// Process families with closed-form results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    PureBirthConst,
    PureBirthLinear,
    IeConst,
    IeTimeVarying,
    Id,
    Ibd,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::PureBirthConst,
        PresetName::PureBirthLinear,
        PresetName::IeConst,
        PresetName::IeTimeVarying,
        PresetName::Id,
        PresetName::Ibd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::PureBirthConst => "pure_birth_const",
            PresetName::PureBirthLinear => "pure_birth_linear",
            PresetName::IeConst => "ie_const",
            PresetName::IeTimeVarying => "ie_timevarying",
            PresetName::Id => "id",
            PresetName::Ibd => "ibd",
        }
    }

    /// Required parameters, then optional ones with defaults.
    pub fn params(self) -> (&'static [&'static str], &'static [(&'static str, f64)]) {
        match self {
            PresetName::PureBirthConst => (&["alpha", "xi"], &[("r", 0.0)]),
            PresetName::PureBirthLinear => (&["xi", "k"], &[("r", 0.0)]),
            PresetName::IeConst => (&["alpha", "beta", "xi"], &[]),
            PresetName::IeTimeVarying => (
                &["alpha", "beta", "xi"],
                &[("xi_amp", 0.0), ("w_amp", 0.0), ("w_freq", 1.0)],
            ),
            PresetName::Id => (&["nu", "beta", "xi"], &[]),
            PresetName::Ibd => (&["alpha", "nu", "beta", "xi"], &[]),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetName::PureBirthConst => "pure birth, constant rate alpha",
            PresetName::PureBirthLinear => "pure birth, rate xi*(n+k)",
            PresetName::IeConst => "immigration-emigration, constant alpha and beta",
            PresetName::IeTimeVarying => {
                "immigration-emigration with rates scaled by w(t)=1+w_amp*sin(w_freq*t), xi(t)=xi+xi_amp*sin(t)^2"
            }
            PresetName::Id => "immigration-death, birth nu, death beta*n",
            PresetName::Ibd => "immigration-birth-death, birth alpha*n+nu, death beta*n",
        }
    }
}

impl std::str::FromStr for PresetName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| ModelError::UnknownPreset(s.to_string()))
    }
}

/// A preset resolves to either kind of spec.
#[derive(Clone)]
pub enum Preset<T = f64> {
    Homogeneous(ProcessSpec<T>),
    TimeVarying(TimeVaryingSpec<T>),
}

impl<T: Real> fmt::Debug for Preset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Homogeneous(s) => s.fmt(f),
            Preset::TimeVarying(s) => s.fmt(f),
        }
    }
}

impl<T: Real> Preset<T> {
    pub fn homogeneous(self) -> Option<ProcessSpec<T>> {
        match self {
            Preset::Homogeneous(s) => Some(s),
            Preset::TimeVarying(_) => None,
        }
    }

    pub fn time_varying(self) -> Option<TimeVaryingSpec<T>> {
        match self {
            Preset::TimeVarying(s) => Some(s),
            Preset::Homogeneous(_) => None,
        }
    }
}

/// Builds a named preset from its parameters; unknown or missing parameters are errors.
pub fn zoo_preset<T: Real>(name: &str, params: &BTreeMap<String, f64>) -> Result<Preset<T>, ModelError> {
    let preset: PresetName = name.parse()?;
    let (required, optional) = preset.params();
    let bad = |param: &str, problem: &str| ModelError::BadParameter {
        preset: name.to_string(),
        param: param.to_string(),
        problem: problem.to_string(),
    };
    for key in params.keys() {
        if !required.contains(&key.as_str()) && !optional.iter().any(|(o, _)| o == key) {
            return Err(bad(key, "is not a parameter of this preset"));
        }
    }
    let mut v = BTreeMap::new();
    for &p in required {
        let x = *params.get(p).ok_or_else(|| bad(p, "is missing"))?;
        v.insert(p, x);
    }
    for &(p, default) in optional {
        v.insert(p, params.get(p).copied().unwrap_or(default));
    }
    for (&p, &x) in &v {
        if !x.is_finite() {
            return Err(bad(p, "must be finite"));
        }
        let may_be_zero = matches!(p, "r" | "xi_amp" | "w_amp");
        if x < 0.0 || (x == 0.0 && !may_be_zero) {
            return Err(bad(p, if may_be_zero { "must be nonnegative" } else { "must be positive" }));
        }
    }
    let int_param = |p: &str| -> Result<usize, ModelError> {
        let x = v[p];
        if x.fract() != 0.0 {
            return Err(bad(p, "must be an integer"));
        }
        Ok(x as usize)
    };
    let get = |p: &str| T::lit(v[p]);
    let spec = match preset {
        PresetName::PureBirthConst => {
            let a = get("alpha");
            ProcessSpec::from_fns(int_param("r")?, move |_| a, |_| T::zero(), get("xi"))
        }
        PresetName::PureBirthLinear => {
            let xi = get("xi");
            let k = T::from_usize_lossy(int_param("k")?);
            ProcessSpec::from_fns(
                int_param("r")?,
                move |n| xi * (T::from_usize_lossy(n) + k),
                |_| T::zero(),
                xi,
            )
        }
        PresetName::IeConst => {
            let (a, b) = (get("alpha"), get("beta"));
            ProcessSpec::from_fns(0, move |_| a, move |_| b, get("xi"))
        }
        PresetName::IeTimeVarying => {
            let (a, b, xi) = (get("alpha"), get("beta"), get("xi"));
            let (xi_amp, w_amp, w_freq) = (get("xi_amp"), get("w_amp"), get("w_freq"));
            if w_amp >= T::one() {
                return Err(bad("w_amp", "must be below 1 so that w(t) stays positive"));
            }
            let w = move |t: T| T::one() + w_amp * (w_freq * t).sin();
            let bound = (a + b) * (T::one() + w_amp) + xi + xi_amp;
            return Ok(Preset::TimeVarying(TimeVaryingSpec::new(
                0,
                T::zero(),
                Arc::new(move |_, t| a * w(t)),
                Arc::new(move |_, t| b * w(t)),
                Arc::new(move |t: T| xi + xi_amp * t.sin() * t.sin()),
                Arc::new(move |_| bound),
            )));
        }
        PresetName::Id => {
            let (nu, b) = (get("nu"), get("beta"));
            ProcessSpec::from_fns(0, move |_| nu, move |n| b * T::from_usize_lossy(n), get("xi"))
        }
        PresetName::Ibd => {
            let (a, nu, b) = (get("alpha"), get("nu"), get("beta"));
            ProcessSpec::from_fns(
                0,
                move |n| a * T::from_usize_lossy(n) + nu,
                move |n| b * T::from_usize_lossy(n),
                get("xi"),
            )
        }
    };
    Ok(Preset::Homogeneous(spec))
}

/// Convenience for building parameter maps in code.
pub fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}
