use attractorkit::bounds::SqueezeVerification;
use attractorkit::config::Fixture;
use attractorkit::covering::TreeLevel;
use attractorkit::pipeline::{self, Analysis, AttractorDimension, Certification, DissipativitySummary};
use attractorkit::Result;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SqueezeSummary {
    pub pairs: usize,
    pub checks: usize,
    pub seed: u64,
    pub slack: f64,
    pub step: f64,
    pub ball_radius: f64,
    pub pass_rate: f64,
    pub literal_pass_rate: f64,
    pub all_pass: bool,
    pub rejected_draws: usize,
}

impl From<&SqueezeVerification> for SqueezeSummary {
    fn from(v: &SqueezeVerification) -> Self {
        Self {
            pairs: v.pairs,
            checks: v.records.len(),
            seed: v.seed,
            slack: v.slack,
            step: v.step,
            ball_radius: v.ball_radius,
            pass_rate: v.pass_rate,
            literal_pass_rate: v.literal_pass_rate,
            all_pass: v.all_pass,
            rejected_draws: v.rejected_draws,
        }
    }
}

/// A covering level without its centers.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub radius: f64,
    pub cardinality: usize,
    pub bound: f64,
    pub max_residual: f64,
    pub max_center_gap: f64,
    pub centers_near_image: bool,
    pub image_covered: bool,
    pub within_bound: bool,
}

impl From<&TreeLevel> for LevelSummary {
    fn from(l: &TreeLevel) -> Self {
        Self {
            level: l.level,
            radius: l.radius,
            cardinality: l.cardinality,
            bound: l.bound,
            max_residual: l.max_residual,
            max_center_gap: l.max_center_gap,
            centers_near_image: l.centers_near_image(),
            image_covered: l.image_covered(),
            within_bound: l.within_bound(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub rho1: f64,
    pub rho_m: f64,
    pub cut_m: usize,
    pub k_m: usize,
    pub multiplicities: Vec<usize>,
    pub rhos: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub squeezing: SqueezeSummary,
    pub dissipativity: Option<DissipativitySummary>,
    pub box_counting: AttractorDimension,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub spectrum: SpectralSummary,
    pub certification: Certification,
    pub verification: Verification,
}

impl CertificationReport {
    pub fn build(fx: &Fixture, analysis: &Analysis, ladder: Option<&[f64]>, trajectories: usize) -> Result<Self> {
        let d = analysis.decomp();
        let squeezing = SqueezeSummary::from(&pipeline::squeeze(fx, analysis)?);
        let dissipativity = pipeline::dissipativity(fx, &analysis.spectrum)?;
        let box_counting = pipeline::attractor_dimension(fx, analysis, trajectories, fx.analysis.seed, ladder)?;
        Ok(Self {
            spectrum: SpectralSummary {
                rho1: d.rho1(),
                rho_m: d.rho_m(),
                cut_m: d.cut(),
                k_m: d.k_m(),
                multiplicities: d.multiplicities(),
                rhos: d.report().rhos,
            },
            certification: analysis.certification.clone(),
            verification: Verification {
                squeezing,
                dissipativity,
                box_counting,
            },
        })
    }

    pub fn rows(&self) -> Vec<String> {
        let v = &self.verification;
        let mut rows = certification_rows(&self.certification, self.spectrum.rho1);
        rows.push(format!("squeeze_pass_rate,{}", v.squeezing.pass_rate));
        rows.push(format!("squeeze_literal_pass_rate,{}", v.squeezing.literal_pass_rate));
        if let Some(diss) = &v.dissipativity {
            rows.push(format!("dissipativity_pass,{}", diss.pass));
        }
        rows.push(format!("box_counting_estimate,{}", v.box_counting.report.estimate));
        rows.push(format!("box_counting_within_bound,{}", v.box_counting.within_bound));
        rows
    }
}

fn certification_rows(c: &Certification, rho1: f64) -> Vec<String> {
    let k = &c.certificate.constants;
    let mut rows = vec![
        format!("rho1,{rho1}"),
        format!("lambda_dim,{}", k.lambda_dim),
        format!("K,{}", k.inputs.k),
        format!("K0,{}", k.inputs.k0),
        format!("gamma,{}", k.inputs.gamma),
        format!("M1,{}", k.m1),
        format!("M2,{}", k.m2),
        format!("M3,{}", k.m3),
        format!("lambda0,{}", k.lambda0),
        format!("lambda1,{}", k.lambda1),
        format!("alpha,{}", c.alpha),
        format!("zeta,{}", c.certificate.zeta),
        format!("bound,{}", c.bound.bound),
        format!("bound_literal,{}", c.bound.bound_literal),
    ];
    if let Ok(ball) = c.balls.working() {
        rows.push(format!("ball_radius,{}", ball.radius));
    }
    rows
}

pub fn summary_rows(analysis: &Analysis) -> Vec<String> {
    certification_rows(&analysis.certification, analysis.decomp().rho1())
}
