//! Dormand-Prince 8(5,3) integrator with 7th-order dense output.

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step magnitude; `None` means the whole span.
    pub h_max: Option<f64>,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: None,
            h_init: None,
            max_steps: 100_000,
        }
    }
}

const SAFE: f64 = 0.9;
const FACC1: f64 = 1.0 / 0.333;
const FACC2: f64 = 1.0 / 6.0;
const EXPO1: f64 = 1.0 / 8.0;

/// Interpolant over one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    n: usize,
    cont: Vec<f64>,
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> &[f64] {
        &self.cont[..self.n]
    }

    pub fn y1(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval(self.t1(), &mut out);
        out
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let n = self.n;
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = |k: usize, i: usize| self.cont[k * n + i];
        for i in 0..n {
            if s == 1.0 {
                // exact end state
                out[i] = c(0, i) + c(1, i);
                continue;
            }
            let conpar = c(4, i) + (c(5, i) + (c(6, i) + c(7, i) * s) * s1) * s;
            out[i] = c(0, i) + (c(1, i) + (c(2, i) + (c(3, i) + conpar * s1) * s) * s1) * s;
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.h >= 0.0 {
            (self.t0, self.t1())
        } else {
            (self.t1(), self.t0)
        };
        t >= a && t <= b
    }
}

/// Result of a full integration: the chain of dense steps.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub steps: Vec<DenseStep>,
    pub t0: f64,
    pub y0: Vec<f64>,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        self.steps.last().map(|s| s.t1()).unwrap_or(self.t0)
    }

    pub fn y_end(&self) -> Vec<f64> {
        self.steps
            .last()
            .map(|s| s.y1())
            .unwrap_or_else(|| self.y0.clone())
    }

    /// Dense evaluation anywhere in the integrated span.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.y0.len()];
        if self.steps.is_empty() {
            out.copy_from_slice(&self.y0);
            return out;
        }
        let fwd = self.steps[0].h > 0.0;
        let i = self
            .steps
            .partition_point(|s| if fwd { s.t1() < t } else { s.t1() > t });
        let i = i.min(self.steps.len() - 1);
        self.steps[i].eval(t, &mut out);
        out
    }
}

/// Stepper state.
pub struct Dop853<'a, S: OdeSystem> {
    sys: &'a S,
    n: usize,
    t: f64,
    y: Vec<f64>,
    h: f64,
    dir: f64,
    opts: OdeOptions,
    facold: f64,
    last_rejected: bool,
    steps: usize,
    k: Vec<Vec<f64>>,
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    pub nfev: usize,
}

impl<'a, S: OdeSystem> Dop853<'a, S> {
    /// Prepares integration from `t0` in the direction of `t_end`.
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], t_end: f64, opts: OdeOptions) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::InvalidInput("state dimension mismatch".into()));
        }
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut st = Dop853 {
            sys,
            n,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            dir,
            opts,
            facold: 1e-4,
            last_rejected: false,
            steps: 0,
            k: vec![vec![0.0; n]; 17],
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
            nfev: 0,
        };
        let span = (t_end - t0).abs();
        if st.opts.h_max.is_none() {
            st.opts.h_max = Some(span.max(f64::MIN_POSITIVE));
        }
        sys.rhs(t0, &st.y, &mut st.k[1])?;
        st.nfev += 1;
        st.h = match opts.h_init {
            Some(h) => h.abs() * dir,
            None => st.initial_step()?,
        };
        Ok(st)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn h_max(&self) -> f64 {
        self.opts.h_max.unwrap_or(f64::INFINITY)
    }

    fn initial_step(&mut self) -> Result<f64> {
        let n = self.n;
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..n {
            let sk = self.opts.atol + self.opts.rtol * self.y[i].abs();
            dnf += (self.k[1][i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.h_max()) * self.dir;
        for i in 0..n {
            self.ytmp[i] = self.y[i] + h * self.k[1][i];
        }
        self.sys.rhs(self.t + h, &self.ytmp, &mut self.k[2])?;
        self.nfev += 1;
        let mut der2 = 0.0;
        for i in 0..n {
            let sk = self.opts.atol + self.opts.rtol * self.y[i].abs();
            der2 += ((self.k[2][i] - self.k[1][i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h.abs();
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h.abs() * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        Ok((100.0 * h.abs()).min(h1).min(self.h_max()) * self.dir)
    }

    /// Advances by one accepted step without passing `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<DenseStep> {
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::StepFailure {
                    s: self.t,
                    reason: "maximum number of steps".into(),
                });
            }
            let remaining = t_limit - self.t;
            if remaining * self.dir <= 0.0 {
                return Err(Error::InvalidInput(
                    "step requested past the integration limit".into(),
                ));
            }
            let mut h = self.h;
            let mut last = false;
            if (self.t + 1.01 * h - t_limit) * self.dir > 0.0 {
                h = remaining;
                last = true;
            }
            if h.abs() <= 1e-14 * self.t.abs().max(1e-3) {
                return Err(Error::StepFailure {
                    s: self.t,
                    reason: format!("step size underflow ({h:e})"),
                });
            }
            self.steps += 1;
            stages(self.sys, self.t, &self.y, h, &mut self.k, &mut self.ytmp)?;
            self.nfev += 11;
            let n = self.n;
            // 8th-order solution
            for i in 0..n {
                let k = &self.k;
                let bsum = B1 * k[1][i]
                    + B6 * k[6][i]
                    + B7 * k[7][i]
                    + B8 * k[8][i]
                    + B9 * k[9][i]
                    + B10 * k[10][i]
                    + B11 * k[11][i]
                    + B12 * k[12][i];
                self.ytmp[i] = bsum;
                self.ynew[i] = self.y[i] + h * bsum;
            }
            let (mut err, mut err2) = (0.0, 0.0);
            for i in 0..n {
                let k = &self.k;
                let sk = self.opts.atol + self.opts.rtol * self.y[i].abs().max(self.ynew[i].abs());
                let e3 = self.ytmp[i] - BHH1 * k[1][i] - BHH2 * k[9][i] - BHH3 * k[12][i];
                err2 += (e3 / sk).powi(2);
                let e5 = ER1 * k[1][i]
                    + ER6 * k[6][i]
                    + ER7 * k[7][i]
                    + ER8 * k[8][i]
                    + ER9 * k[9][i]
                    + ER10 * k[10][i]
                    + ER11 * k[11][i]
                    + ER12 * k[12][i];
                err += (e5 / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h.abs() * err * (1.0 / (deno * n as f64)).sqrt();
            if !err.is_finite() {
                self.h = 0.5 * h;
                self.last_rejected = true;
                continue;
            }
            let fac11 = err.powf(EXPO1);
            let fac = FACC2.max(FACC1.min(fac11 / SAFE));
            let mut h_new = h / fac;
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                let t_new = if last { t_limit } else { self.t + h };
                let (_, tail) = self.k.split_at_mut(13);
                self.sys.rhs(t_new, &self.ynew, &mut tail[0])?;
                self.nfev += 1;
                let dense = self.dense(h)?;
                if self.last_rejected {
                    h_new = self.dir * h_new.abs().min(h.abs());
                }
                self.last_rejected = false;
                self.t = t_new;
                self.y.copy_from_slice(&self.ynew);
                self.k.swap(1, 13);
                self.h = self.dir * h_new.abs().min(self.h_max());
                return Ok(dense);
            }
            h_new = h / FACC1.min(fac11 / SAFE);
            self.last_rejected = true;
            self.h = self.dir * h_new.abs().min(self.h_max());
        }
    }

    fn dense(&mut self, h: f64) -> Result<DenseStep> {
        let n = self.n;
        let t = self.t;
        {
            let k = &self.k;
            for i in 0..n {
                self.ytmp[i] = self.y[i]
                    + h * (A141 * k[1][i]
                        + A147 * k[7][i]
                        + A148 * k[8][i]
                        + A149 * k[9][i]
                        + A1410 * k[10][i]
                        + A1411 * k[11][i]
                        + A1412 * k[12][i]
                        + A1413 * k[13][i]);
            }
        }
        let (_, tail) = self.k.split_at_mut(14);
        self.sys.rhs(t + C14 * h, &self.ytmp, &mut tail[0])?;
        {
            let k = &self.k;
            for i in 0..n {
                self.ytmp[i] = self.y[i]
                    + h * (A151 * k[1][i]
                        + A156 * k[6][i]
                        + A157 * k[7][i]
                        + A158 * k[8][i]
                        + A1511 * k[11][i]
                        + A1512 * k[12][i]
                        + A1513 * k[13][i]
                        + A1514 * k[14][i]);
            }
        }
        let (_, tail) = self.k.split_at_mut(15);
        self.sys.rhs(t + C15 * h, &self.ytmp, &mut tail[0])?;
        {
            let k = &self.k;
            for i in 0..n {
                self.ytmp[i] = self.y[i]
                    + h * (A161 * k[1][i]
                        + A166 * k[6][i]
                        + A167 * k[7][i]
                        + A168 * k[8][i]
                        + A169 * k[9][i]
                        + A1613 * k[13][i]
                        + A1614 * k[14][i]
                        + A1615 * k[15][i]);
            }
        }
        let (_, tail) = self.k.split_at_mut(16);
        self.sys.rhs(t + C16 * h, &self.ytmp, &mut tail[0])?;
        self.nfev += 3;
        let k = &self.k;
        let mut cont = vec![0.0; 8 * n];
        for i in 0..n {
            let ydiff = self.ynew[i] - self.y[i];
            let bspl = h * k[1][i] - ydiff;
            cont[i] = self.y[i];
            cont[n + i] = ydiff;
            cont[2 * n + i] = bspl;
            cont[3 * n + i] = ydiff - h * k[13][i] - bspl;
            let d = |c: &[f64; 12]| {
                c[0] * k[1][i]
                    + c[1] * k[6][i]
                    + c[2] * k[7][i]
                    + c[3] * k[8][i]
                    + c[4] * k[9][i]
                    + c[5] * k[10][i]
                    + c[6] * k[11][i]
                    + c[7] * k[12][i]
                    + c[8] * k[13][i]
                    + c[9] * k[14][i]
                    + c[10] * k[15][i]
                    + c[11] * k[16][i]
            };
            cont[4 * n + i] = h * d(&D4);
            cont[5 * n + i] = h * d(&D5);
            cont[6 * n + i] = h * d(&D6);
            cont[7 * n + i] = h * d(&D7);
        }
        Ok(DenseStep { t0: t, h, n, cont })
    }
}

/// Stages 2..12 into `k[2..=12]`; `k[1]` must hold `f(t, y)`.
fn stages<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>],
    ytmp: &mut [f64],
) -> Result<()> {
    let rows: [(f64, &[(usize, f64)]); 11] = [
        (C2, &[(1, A21)]),
        (C3, &[(1, A31), (2, A32)]),
        (C4, &[(1, A41), (3, A43)]),
        (C5, &[(1, A51), (3, A53), (4, A54)]),
        (C6, &[(1, A61), (4, A64), (5, A65)]),
        (C7, &[(1, A71), (4, A74), (5, A75), (6, A76)]),
        (C8, &[(1, A81), (4, A84), (5, A85), (6, A86), (7, A87)]),
        (
            C9,
            &[(1, A91), (4, A94), (5, A95), (6, A96), (7, A97), (8, A98)],
        ),
        (
            C10,
            &[
                (1, A101),
                (4, A104),
                (5, A105),
                (6, A106),
                (7, A107),
                (8, A108),
                (9, A109),
            ],
        ),
        (
            C11,
            &[
                (1, A111),
                (4, A114),
                (5, A115),
                (6, A116),
                (7, A117),
                (8, A118),
                (9, A119),
                (10, A1110),
            ],
        ),
        (
            1.0,
            &[
                (1, A121),
                (4, A124),
                (5, A125),
                (6, A126),
                (7, A127),
                (8, A128),
                (9, A129),
                (10, A1210),
                (11, A1211),
            ],
        ),
    ];
    for (s, (c, row)) in rows.iter().enumerate() {
        for i in 0..y.len() {
            let mut acc = 0.0;
            for &(j, a) in row.iter() {
                acc += a * k[j][i];
            }
            ytmp[i] = y[i] + h * acc;
        }
        let (_, tail) = k.split_at_mut(s + 2);
        sys.rhs(t + c * h, ytmp, &mut tail[0])?;
    }
    Ok(())
}

/// One step of the 8th-order formula without error control.
pub fn raw_step<S: OdeSystem>(sys: &S, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 13];
    let mut ytmp = vec![0.0; n];
    sys.rhs(t, y, &mut k[1])?;
    if h == 0.0 {
        return Ok(y.to_vec());
    }
    stages(sys, t, y, h, &mut k, &mut ytmp)?;
    Ok((0..n)
        .map(|i| {
            y[i] + h
                * (B1 * k[1][i]
                    + B6 * k[6][i]
                    + B7 * k[7][i]
                    + B8 * k[8][i]
                    + B9 * k[9][i]
                    + B10 * k[10][i]
                    + B11 * k[11][i]
                    + B12 * k[12][i])
        })
        .collect())
}

/// Integrates from `t0` to `t_end`, keeping every dense step.
pub fn solve<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: OdeOptions,
) -> Result<OdeSolution> {
    let mut sol = OdeSolution {
        steps: Vec::new(),
        t0,
        y0: y0.to_vec(),
    };
    if t_end == t0 {
        return Ok(sol);
    }
    let mut st = Dop853::new(sys, t0, y0, t_end, opts)?;
    while st.t() != t_end {
        sol.steps.push(st.step(t_end)?);
    }
    Ok(sol)
}

const D4: [f64; 12] = [
    D41, D46, D47, D48, D49, D410, D411, D412, D413, D414, D415, D416,
];
const D5: [f64; 12] = [
    D51, D56, D57, D58, D59, D510, D511, D512, D513, D514, D515, D516,
];
const D6: [f64; 12] = [
    D61, D66, D67, D68, D69, D610, D611, D612, D613, D614, D615, D616,
];
const D7: [f64; 12] = [
    D71, D76, D77, D78, D79, D710, D711, D712, D713, D714, D715, D716,
];

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;
const A141: f64 = 5.61675022830479523392909219681E-2;
const A147: f64 = 2.53500210216624811088794765333E-1;
const A148: f64 = -2.46239037470802489917441475441E-1;
const A149: f64 = -1.24191423263816360469010140626E-1;
const A1410: f64 = 1.5329179827876569731206322685E-1;
const A1411: f64 = 8.20105229563468988491666602057E-3;
const A1412: f64 = 7.56789766054569976138603589584E-3;
const A1413: f64 = -8.298E-3;
const A151: f64 = 3.18346481635021405060768473261E-2;
const A156: f64 = 2.83009096723667755288322961402E-2;
const A157: f64 = 5.35419883074385676223797384372E-2;
const A158: f64 = -5.49237485713909884646569340306E-2;
const A1511: f64 = -1.08347328697249322858509316994E-4;
const A1512: f64 = 3.82571090835658412954920192323E-4;
const A1513: f64 = -3.40465008687404560802977114492E-4;
const A1514: f64 = 1.41312443674632500278074618366E-1;
const A161: f64 = -4.28896301583791923408573538692E-1;
const A166: f64 = -4.69762141536116384314449447206E0;
const A167: f64 = 7.68342119606259904184240953878E0;
const A168: f64 = 4.06898981839711007970213554331E0;
const A169: f64 = 3.56727187455281109270669543021E-1;
const A1613: f64 = -1.39902416515901462129418009734E-3;
const A1614: f64 = 2.9475147891527723389556272149E0;
const A1615: f64 = -9.15095847217987001081870187138E0;
const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;
const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;
const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;
const C14: f64 = 0.1E+00;
const C15: f64 = 0.2E+00;
const C16: f64 = 0.777777777777777777777777777778E+00;
const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
const D41: f64 = -0.84289382761090128651353491142E+01;
const D46: f64 = 0.56671495351937776962531783590E+00;
const D47: f64 = -0.30689499459498916912797304727E+01;
const D48: f64 = 0.23846676565120698287728149680E+01;
const D49: f64 = 0.21170345824450282767155149946E+01;
const D410: f64 = -0.87139158377797299206789907490E+00;
const D411: f64 = 0.22404374302607882758541771650E+01;
const D412: f64 = 0.63157877876946881815570249290E+00;
const D413: f64 = -0.88990336451333310820698117400E-01;
const D414: f64 = 0.18148505520854727256656404962E+02;
const D415: f64 = -0.91946323924783554000451984436E+01;
const D416: f64 = -0.44360363875948939664310572000E+01;
const D51: f64 = 0.10427508642579134603413151009E+02;
const D56: f64 = 0.24228349177525818288430175319E+03;
const D57: f64 = 0.16520045171727028198505394887E+03;
const D58: f64 = -0.37454675472269020279518312152E+03;
const D59: f64 = -0.22113666853125306036270938578E+02;
const D510: f64 = 0.77334326684722638389603898808E+01;
const D511: f64 = -0.30674084731089398182061213626E+02;
const D512: f64 = -0.93321305264302278729567221706E+01;
const D513: f64 = 0.15697238121770843886131091075E+02;
const D514: f64 = -0.31139403219565177677282850411E+02;
const D515: f64 = -0.93529243588444783865713862664E+01;
const D516: f64 = 0.35816841486394083752465898540E+02;
const D61: f64 = 0.19985053242002433820987653617E+02;
const D66: f64 = -0.38703730874935176555105901742E+03;
const D67: f64 = -0.18917813819516756882830838328E+03;
const D68: f64 = 0.52780815920542364900561016686E+03;
const D69: f64 = -0.11573902539959630126141871134E+02;
const D610: f64 = 0.68812326946963000169666922661E+01;
const D611: f64 = -0.10006050966910838403183860980E+01;
const D612: f64 = 0.77771377980534432092869265740E+00;
const D613: f64 = -0.27782057523535084065932004339E+01;
const D614: f64 = -0.60196695231264120758267380846E+02;
const D615: f64 = 0.84320405506677161018159903784E+02;
const D616: f64 = 0.11992291136182789328035130030E+02;
const D71: f64 = -0.25693933462703749003312586129E+02;
const D76: f64 = -0.15418974869023643374053993627E+03;
const D77: f64 = -0.23152937917604549567536039109E+03;
const D78: f64 = 0.35763911791061412378285349910E+03;
const D79: f64 = 0.93405324183624310003907691704E+02;
const D710: f64 = -0.37458323136451633156875139351E+02;
const D711: f64 = 0.10409964950896230045147246184E+03;
const D712: f64 = 0.29840293426660503123344363579E+02;
const D713: f64 = -0.43533456590011143754432175058E+02;
const D714: f64 = 0.96324553959188282948394950600E+02;
const D715: f64 = -0.39177261675615439165231486172E+02;
const D716: f64 = -0.14972683625798562581422125276E+03;

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
    }

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = -2.0 * t * y[0];
            Ok(())
        }
    }

    #[test]
    fn oscillator_end_state_and_dense_output() {
        let sol = solve(
            &Oscillator,
            0.0,
            &[1.0, 0.0],
            10.0,
            OdeOptions::with_tol(1e-12),
        )
        .unwrap();
        let y = sol.y_end();
        assert!((y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((y[1] + 10f64.sin()).abs() < 1e-10);
        for &t in &[0.3, 2.71, 5.5, 9.99] {
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-10, "{t}");
        }
        // interpolant reproduces step endpoints
        for s in &sol.steps {
            let mut out = [0.0; 2];
            s.eval(s.t0, &mut out);
            assert_eq!(out[0], s.y0()[0]);
        }
    }

    #[test]
    fn backward_integration() {
        let sol = solve(
            &Decay,
            2.0,
            &[(-4.0f64).exp()],
            0.0,
            OdeOptions::with_tol(1e-12),
        )
        .unwrap();
        assert!((sol.y_end()[0] - 1.0).abs() < 1e-10);
        assert!((sol.eval(1.0)[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn raw_step_has_eighth_order() {
        let e = |h: f64| {
            let y = raw_step(&Oscillator, 0.0, &[1.0, 0.0], h).unwrap();
            (y[0] - h.cos()).abs().max((y[1] + h.sin()).abs())
        };
        let ratio = e(0.4) / e(0.2);
        assert!(ratio > 2f64.powi(8), "{ratio}");
    }

    #[test]
    fn tolerance_convergence() {
        let mut prev = f64::INFINITY;
        for tol in [1e-6, 1e-9, 1e-12] {
            let sol = solve(
                &Oscillator,
                0.0,
                &[1.0, 0.0],
                20.0,
                OdeOptions::with_tol(tol),
            )
            .unwrap();
            let err = (sol.y_end()[0] - 20f64.cos()).abs();
            assert!(err < prev && err < 100.0 * tol);
            prev = err;
        }
    }
}
