use serde::{Deserialize, Serialize};

use crate::integrator::Trajectory;
use crate::model::{AnsatzKind, RadialProfile, Variant};
use crate::shooting::ShootingProblem;

/// Sampled fields of a converged solution on the integrator's own grid.
///
/// `dU` and `dlambda` are stored so that every field can be interpolated
/// with cubic Hermite accuracy after a round trip through JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    pub n: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    #[serde(rename = "dU")]
    pub du: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub dlambda: Vec<f64>,
}

impl Profiles {
    pub fn from_trajectory(traj: &Trajectory<4>) -> Self {
        Profiles {
            r: traj.radii.clone(),
            k: traj.states.iter().map(|y| y[0]).collect(),
            n: traj.states.iter().map(|y| y[1]).collect(),
            u: traj.states.iter().map(|y| y[2]).collect(),
            du: traj.states.iter().map(|y| y[3]).collect(),
            lambda: Vec::new(),
            dlambda: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `k'` from the first-order system.
    pub fn dk(&self, variant: Variant) -> Vec<f64> {
        (0..self.len())
            .map(|i| match variant {
                Variant::A => self.n[i],
                Variant::B => -self.n[i] - 2.0 * self.k[i] / self.r[i],
            })
            .collect()
    }

    /// `n'` from the first-order system.
    pub fn dn(&self, variant: Variant) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (r, k, n, u) = (self.r[i], self.k[i], self.n[i], self.u[i]);
                match variant {
                    Variant::A => (u - 1.0 / r) * k - 2.0 * n / r,
                    Variant::B => -(u - 1.0 / r) * k,
                }
            })
            .collect()
    }

    pub fn k_profile(&self, variant: Variant) -> RadialProfile {
        RadialProfile {
            radii: self.r.clone(),
            values: self.k.clone(),
            derivs: Some(self.dk(variant)),
        }
    }

    pub fn u_profile(&self) -> RadialProfile {
        RadialProfile {
            radii: self.r.clone(),
            values: self.u.clone(),
            derivs: Some(self.du.clone()),
        }
    }

    pub fn lambda_profile(&self) -> Option<RadialProfile> {
        if self.lambda.len() != self.r.len() {
            return None;
        }
        let derivs = (self.dlambda.len() == self.r.len()).then(|| self.dlambda.clone());
        Some(RadialProfile {
            radii: self.r.clone(),
            values: self.lambda.clone(),
            derivs,
        })
    }

    /// Multiply `k` and `n` by `c`, leaving `U` untouched.
    pub fn scale_spinor(&mut self, c: f64) {
        self.k.iter_mut().for_each(|v| *v *= c);
        self.n.iter_mut().for_each(|v| *v *= c);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Provenance {
    pub fn current() -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    #[serde(flatten)]
    pub ansatz: AnsatzKind,
    pub nodes: u32,
    pub n: u32,
    #[serde(default = "default_true")]
    pub self_field: bool,
    pub beta0: f64,
    pub delta0: f64,
    pub gamma0: f64,
    pub epsilon: f64,
    pub q: f64,
    #[serde(default)]
    pub q_flux: f64,
    pub r0: f64,
    pub self_energy: f64,
    pub w_binding: f64,
    pub w_binding_alt: f64,
    pub identity_residual: f64,
    pub mu: f64,
    /// Moment from the integral identity, for comparison with `mu`.
    #[serde(default)]
    pub mu_identity: f64,
    pub j: f64,
    pub profiles: Profiles,
    #[serde(default)]
    pub config: Option<ShootingProblem>,
    pub provenance: Provenance,
}

fn default_true() -> bool {
    true
}

impl SolutionRecord {
    pub fn has_magnetic(&self) -> bool {
        !self.profiles.lambda.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records contain only finite-or-null numbers")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
