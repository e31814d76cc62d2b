//! Explicit Runge-Kutta 8(5,3) pair of Dormand and Prince with the
//! seventh-order continuous extension (Hairer, Norsett and Wanner's DOP853).
//!
//! Each accepted step hands back a [`DenseSegment`] so callers can locate
//! events anywhere inside the step.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("maximum number of steps reached at t = {0}")]
    TooManySteps(f64),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dy: &mut [f64; N]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances { rtol: tol, atol: tol }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            safety: 0.9,
            fac_min: 0.333,
            fac_max: 6.0,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

/// Interpolant valid on `[t0, t0 + h]`.
#[derive(Clone, Debug)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 8],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        let mut out = [0.0; N];
        for i in 0..N {
            let v = r[6][i] + r[7][i] * s;
            let v = r[5][i] + v * s1;
            let v = r[4][i] + v * s;
            let v = r[3][i] + v * s1;
            let v = r[2][i] + v * s;
            let v = r[1][i] + v * s1;
            out[i] = r[0][i] + v * s;
        }
        out
    }

    /// Single component, for root finding.
    pub fn eval_component(&self, t: f64, i: usize) -> f64 {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        let v = r[6][i] + r[7][i] * s;
        let v = r[5][i] + v * s1;
        let v = r[4][i] + v * s;
        let v = r[3][i] + v * s1;
        let v = r[2][i] + v * s;
        let v = r[1][i] + v * s1;
        r[0][i] + v * s
    }

    /// Root of component `i` inside the segment, given a sign change
    /// between its ends. Illinois false position, stops when `|y_i| < tol`
    /// or the bracket stops shrinking.
    pub fn find_root(&self, i: usize, tol: f64) -> f64 {
        let (mut a, mut b) = (self.t0, self.t1());
        let (mut fa, mut fb) = (self.eval_component(a, i), self.eval_component(b, i));
        if fa == 0.0 {
            return a;
        }
        if fb == 0.0 {
            return b;
        }
        let mut side = 0i8;
        let mut t = 0.5 * (a + b);
        for _ in 0..200 {
            t = (a * fb - b * fa) / (fb - fa);
            if !(t > a.min(b) && t < a.max(b)) {
                t = 0.5 * (a + b);
            }
            let ft = self.eval_component(t, i);
            if ft.abs() < tol || (b - a).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
                return t;
            }
            if (ft > 0.0) == (fb > 0.0) {
                b = t;
                fb = ft;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            } else {
                a = t;
                fa = ft;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            }
        }
        t
    }
}

const C: [f64; 16] = [
    0.0,
    0.526001519587677318785587544488E-01,
    0.789002279381515978178381316732E-01,
    0.118350341907227396726757197510E+00,
    0.281649658092772603273242802490E+00,
    0.333333333333333333333333333333E+00,
    0.25E+00,
    0.307692307692307692307692307692E+00,
    0.651282051282051282051282051282E+00,
    0.6E+00,
    0.857142857142857142857142857142E+00,
    1.0,
    1.0,
    0.1E+00,
    0.2E+00,
    0.777777777777777777777777777778E+00,
];

// Rows of the Butcher matrix for stages 2..16 (stage 13 is f at the new point).
const A2: [f64; 1] = [5.26001519587677318785587544488E-2];
const A3: [f64; 2] = [1.97250569845378994544595329183E-2, 5.91751709536136983633785987549E-2];
const A4: [f64; 3] = [2.95875854768068491816892993775E-2, 0.0, 8.87627564304205475450678981324E-2];
const A5: [f64; 4] = [
    2.41365134159266685502369798665E-1,
    0.0,
    -8.84549479328286085344864962717E-1,
    9.24834003261792003115737966543E-1,
];
const A6: [f64; 5] = [
    3.7037037037037037037037037037E-2,
    0.0,
    0.0,
    1.70828608729473871279604482173E-1,
    1.25467687566822425016691814123E-1,
];
const A7: [f64; 6] = [
    3.7109375E-2,
    0.0,
    0.0,
    1.70252211019544039314978060272E-1,
    6.02165389804559606850219397283E-2,
    -1.7578125E-2,
];
const A8: [f64; 7] = [
    3.70920001185047927108779319836E-2,
    0.0,
    0.0,
    1.70383925712239993810214054705E-1,
    1.07262030446373284651809199168E-1,
    -1.53194377486244017527936158236E-2,
    8.27378916381402288758473766002E-3,
];
const A9: [f64; 8] = [
    6.24110958716075717114429577812E-1,
    0.0,
    0.0,
    -3.36089262944694129406857109825E0,
    -8.68219346841726006818189891453E-1,
    2.75920996994467083049415600797E1,
    2.01540675504778934086186788979E1,
    -4.34898841810699588477366255144E1,
];
const A10: [f64; 9] = [
    4.77662536438264365890433908527E-1,
    0.0,
    0.0,
    -2.48811461997166764192642586468E0,
    -5.90290826836842996371446475743E-1,
    2.12300514481811942347288949897E1,
    1.52792336328824235832596922938E1,
    -3.32882109689848629194453265587E1,
    -2.03312017085086261358222928593E-2,
];
const A11: [f64; 10] = [
    -9.3714243008598732571704021658E-1,
    0.0,
    0.0,
    5.18637242884406370830023853209E0,
    1.09143734899672957818500254654E0,
    -8.14978701074692612513997267357E0,
    -1.85200656599969598641566180701E1,
    2.27394870993505042818970056734E1,
    2.49360555267965238987089396762E0,
    -3.0467644718982195003823669022E0,
];
const A12: [f64; 11] = [
    2.27331014751653820792359768449E0,
    0.0,
    0.0,
    -1.05344954667372501984066689879E1,
    -2.00087205822486249909675718444E0,
    -1.79589318631187989172765950534E1,
    2.79488845294199600508499808837E1,
    -2.85899827713502369474065508674E0,
    -8.87285693353062954433549289258E0,
    1.23605671757943030647266201528E1,
    6.43392746015763530355970484046E-1,
];
const A14: [f64; 13] = [
    5.61675022830479523392909219681E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    2.53500210216624811088794765333E-1,
    -2.46239037470802489917441475441E-1,
    -1.24191423263816360469010140626E-1,
    1.5329179827876569731206322685E-1,
    8.20105229563468988491666602057E-3,
    7.56789766054569976138603589584E-3,
    -8.298E-3,
];
const A15: [f64; 14] = [
    3.18346481635021405060768473261E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    2.83009096723667755288322961402E-2,
    5.35419883074385676223797384372E-2,
    -5.49237485713909884646569340306E-2,
    0.0,
    0.0,
    -1.08347328697249322858509316994E-4,
    3.82571090835658412954920192323E-4,
    -3.40465008687404560802977114492E-4,
    1.41312443674632500278074618366E-1,
];
const A16: [f64; 15] = [
    -4.28896301583791923408573538692E-1,
    0.0,
    0.0,
    0.0,
    0.0,
    -4.69762141536116384314449447206E0,
    7.68342119606259904184240953878E0,
    4.06898981839711007970213554331E0,
    3.56727187455281109270669543021E-1,
    0.0,
    0.0,
    0.0,
    -1.39902416515901462129418009734E-3,
    2.9475147891527723389556272149E0,
    -9.15095847217987001081870187138E0,
];

const B: [f64; 12] = [
    5.42937341165687622380535766363E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.45031289275240888144113950566E0,
    1.89151789931450038304281599044E0,
    -5.8012039600105847814672114227E0,
    3.1116436695781989440891606237E-1,
    -1.52160949662516078556178806805E-1,
    2.01365400804030348374776537501E-1,
    4.47106157277725905176885569043E-2,
];

const BHH: [f64; 3] = [
    0.244094488188976377952755905512E+00,
    0.733846688281611857341361741547E+00,
    0.220588235294117647058823529412E-01,
];

const ER: [f64; 12] = [
    0.1312004499419488073250102996E-01,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.1225156446376204440720569753E+01,
    -0.4957589496572501915214079952E+00,
    0.1664377182454986536961530415E+01,
    -0.3503288487499736816886487290E+00,
    0.3341791187130174790297318841E+00,
    0.8192320648511571246570742613E-01,
    -0.2235530786388629525884427845E-01,
];

const D: [[f64; 16]; 4] = [
    [
        -0.84289382761090128651353491142E+01,
        0.0,
        0.0,
        0.0,
        0.0,
        0.56671495351937776962531783590E+00,
        -0.30689499459498916912797304727E+01,
        0.23846676565120698287728149680E+01,
        0.21170345824450282767155149946E+01,
        -0.87139158377797299206789907490E+00,
        0.22404374302607882758541771650E+01,
        0.63157877876946881815570249290E+00,
        -0.88990336451333310820698117400E-01,
        0.18148505520854727256656404962E+02,
        -0.91946323924783554000451984436E+01,
        -0.44360363875948939664310572000E+01,
    ],
    [
        0.10427508642579134603413151009E+02,
        0.0,
        0.0,
        0.0,
        0.0,
        0.24228349177525818288430175319E+03,
        0.16520045171727028198505394887E+03,
        -0.37454675472269020279518312152E+03,
        -0.22113666853125306036270938578E+02,
        0.77334326684722638389603898808E+01,
        -0.30674084731089398182061213626E+02,
        -0.93321305264302278729567221706E+01,
        0.15697238121770843886131091075E+02,
        -0.31139403219565177677282850411E+02,
        -0.93529243588444783865713862664E+01,
        0.35816841486394083752465898540E+02,
    ],
    [
        0.19985053242002433820987653617E+02,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.38703730874935176555105901742E+03,
        -0.18917813819516756882830838328E+03,
        0.52780815920542364900561016686E+03,
        -0.11573902539959630126141871134E+02,
        0.68812326946963000169666922661E+01,
        -0.10006050966910838403183860980E+01,
        0.77771377980534432092869265740E+00,
        -0.27782057523535084065932004339E+01,
        -0.60196695231264120758267380846E+02,
        0.84320405506677161018159903784E+02,
        0.11992291136182789328035130030E+02,
    ],
    [
        -0.25693933462703749003312586129E+02,
        0.0,
        0.0,
        0.0,
        0.0,
        -0.15418974869023643374053993627E+03,
        -0.23152937917604549567536039109E+03,
        0.35763911791061412378285349910E+03,
        0.93405324183624310003907691704E+02,
        -0.37458323136451633156875139351E+02,
        0.10409964950896230045147246184E+03,
        0.29840293426660503123344363579E+02,
        -0.43533456590011143754432175058E+02,
        0.96324553959188282948394950600E+02,
        -0.39177261675615439165231486172E+02,
        -0.14972683625798562581422125276E+03,
    ],
];

fn combine<const N: usize>(y: &[f64; N], h: f64, coeffs: &[f64], k: &[[f64; N]]) -> [f64; N] {
    let mut out = *y;
    for (j, &a) in coeffs.iter().enumerate() {
        if a != 0.0 {
            let ha = h * a;
            for i in 0..N {
                out[i] += ha * k[j][i];
            }
        }
    }
    out
}

/// Stepper holding the current point and step size.
pub struct Dop853<'a, S, const N: usize> {
    system: &'a S,
    pub t: f64,
    pub y: [f64; N],
    dy: [f64; N],
    h: f64,
    tol: Tolerances,
    control: StepControl,
    fac_old: f64,
    steps: usize,
    pub evaluations: usize,
}

impl<'a, S: OdeSystem<N>, const N: usize> Dop853<'a, S, N> {
    pub fn new(system: &'a S, t0: f64, y0: [f64; N], tol: Tolerances, control: StepControl) -> Self {
        let mut dy = [0.0; N];
        system.rhs(t0, &y0, &mut dy);
        let mut st = Dop853 {
            system,
            t: t0,
            y: y0,
            dy,
            h: 0.0,
            tol,
            control,
            fac_old: 1e-4,
            steps: 0,
            evaluations: 1,
        };
        st.h = st.initial_step();
        st
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.tol.atol + a.abs().max(b.abs()) * self.tol.rtol
    }

    fn initial_step(&mut self) -> f64 {
        let (mut dnf, mut dny) = (0.0, 0.0);
        for i in 0..N {
            let sk = self.scale(self.y[i], self.y[i]);
            dnf += (self.dy[i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.control.h_max);
        let y1 = combine(&self.y, h, &[1.0], &[self.dy]);
        let mut f1 = [0.0; N];
        self.system.rhs(self.t + h, &y1, &mut f1);
        self.evaluations += 1;
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.scale(self.y[i], self.y[i]);
            der2 += ((f1[i] - self.dy[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            1e-6f64.max(h.abs() * 1e-3)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        (100.0 * h).min(h1).min(self.control.h_max)
    }

    /// Advances by one accepted step, never past `t_stop`.
    pub fn step(&mut self, t_stop: f64) -> Result<DenseSegment<N>, IntegratorError> {
        let mut rejected = false;
        loop {
            if self.steps >= self.control.max_steps {
                return Err(IntegratorError::TooManySteps(self.t));
            }
            if 0.1 * self.h.abs() <= f64::EPSILON * self.t.abs() {
                return Err(IntegratorError::StepSizeUnderflow(self.t));
            }
            let mut last = false;
            let mut h = self.h;
            if self.t + 1.01 * h >= t_stop {
                h = t_stop - self.t;
                last = true;
            }
            self.steps += 1;

            let t = self.t;
            let y = &self.y;
            let mut k = [[0.0; N]; 16];
            k[0] = self.dy;
            let rows: [&[f64]; 11] = [&A2, &A3, &A4, &A5, &A6, &A7, &A8, &A9, &A10, &A11, &A12];
            for (s, row) in rows.iter().enumerate() {
                let ys = combine(y, h, row, &k[..s + 1]);
                let mut out = [0.0; N];
                self.system.rhs(t + C[s + 1] * h, &ys, &mut out);
                k[s + 1] = out;
            }
            self.evaluations += 11;
            let y_new = combine(y, h, &B, &k[..12]);

            let (mut err, mut err2) = (0.0, 0.0);
            for i in 0..N {
                let sk = self.scale(y[i], y_new[i]);
                let mut e5 = 0.0;
                for j in 0..12 {
                    e5 += ER[j] * k[j][i];
                }
                let mut bsum = 0.0;
                for j in 0..12 {
                    bsum += B[j] * k[j][i];
                }
                let e3 = bsum - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
                err += (e5 / sk).powi(2);
                err2 += (e3 / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h.abs() * err * (1.0 / (deno * N as f64)).sqrt();
            if !err.is_finite() {
                if h.abs() < 1e-300 {
                    return Err(IntegratorError::NonFinite(self.t));
                }
                self.h = 0.1 * h;
                rejected = true;
                continue;
            }

            let fac11 = err.powf(1.0 / 8.0);
            let fac = (fac11 / self.control.safety).clamp(1.0 / self.control.fac_max, 1.0 / self.control.fac_min);
            let mut h_new = h / fac;

            if err <= 1.0 {
                self.fac_old = err.max(1e-4);
                let mut f13 = [0.0; N];
                self.system.rhs(t + h, &y_new, &mut f13);
                k[12] = f13;

                let row14 = combine(y, h, &A14, &k[..13]);
                self.system.rhs(t + C[13] * h, &row14, &mut k[13]);
                let row15 = combine(y, h, &A15, &k[..14]);
                self.system.rhs(t + C[14] * h, &row15, &mut k[14]);
                let row16 = combine(y, h, &A16, &k[..15]);
                self.system.rhs(t + C[15] * h, &row16, &mut k[15]);
                self.evaluations += 4;

                let mut rcont = [[0.0; N]; 8];
                for i in 0..N {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k[12][i] - bspl;
                    for (m, drow) in D.iter().enumerate() {
                        let mut acc = 0.0;
                        for j in 0..16 {
                            acc += drow[j] * k[j][i];
                        }
                        rcont[4 + m][i] = h * acc;
                    }
                }
                if rejected {
                    h_new = h_new.min(h);
                }
                self.h = h_new.min(self.control.h_max);
                if last {
                    // keep the controller's suggestion rather than the clipped step
                    self.h = self.h.max(h);
                }
                let seg = DenseSegment { t0: t, h, rcont };
                self.t = if last { t_stop } else { t + h };
                self.y = y_new;
                self.dy = f13;
                return Ok(seg);
            }
            h_new = h / (1.0 / self.control.fac_min).min(fac11 / self.control.safety);
            self.h = h_new;
            rejected = true;
        }
    }
}
