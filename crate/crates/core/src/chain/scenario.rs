use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratfun::RationalTF;

/// Inter-vehicle communication structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Comm {
    None,
    /// Each vehicle transmits `(K e_i + H r_i) / B`.
    Cacc {
        b: RationalTF,
        h: RationalTF,
        w: RationalTF,
    },
    /// Scalar message `v_i = F e_i + G r_i`, received through `W`.
    General {
        f: RationalTF,
        g: RationalTF,
        h: RationalTF,
        w: RationalTF,
    },
}

/// Distance-sensor model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Sensors {
    Identity,
    /// Rear and front sensor parts on compliant mounts with stiffness
    /// transfer functions `kr`, `kf`.
    Mounts {
        kr: RationalTF,
        kf: RationalTF,
    },
}

/// One configuration of a homogeneous unidirectional vehicle chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainScenario {
    headway: f64,
    controller: RationalTF,
    comm: Comm,
    sensors: Sensors,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Headway,
    Cacc,
    General,
    Mounts,
}

fn require_stable(name: &str, tf: &RationalTF) -> Result<()> {
    if !tf.is_stable() {
        return Err(Error::InvalidFilter(format!(
            "{name} must have all poles with negative real parts"
        )));
    }
    Ok(())
}

fn require_bounded(name: &str, tf: &RationalTF) -> Result<()> {
    require_stable(name, tf)?;
    if !tf.is_proper() {
        return Err(Error::InvalidFilter(format!(
            "{name} must be bounded on the imaginary axis (proper)"
        )));
    }
    Ok(())
}

impl ChainScenario {
    pub fn new(headway: f64, controller: RationalTF, comm: Comm, sensors: Sensors) -> Result<Self> {
        if !headway.is_finite() || headway < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "h must be a finite value >= 0, got {headway}"
            )));
        }
        if controller.dc_gain().is_zero() {
            return Err(Error::InvalidScenario(
                "K(0) must be nonzero (no pole cancellation at the origin)".into(),
            ));
        }
        match &comm {
            Comm::None => {}
            Comm::Cacc { b, h, w } => {
                if b.dc_gain().is_zero() {
                    return Err(Error::InvalidFilter("B(0) must be nonzero".into()));
                }
                require_stable("B", b)?;
                require_stable("H", h)?;
                require_bounded("W", w)?;
            }
            Comm::General { f, g, h, w } => {
                require_bounded("F", f)?;
                require_bounded("G", g)?;
                require_stable("H", h)?;
                require_bounded("W", w)?;
                if headway != 0.0 {
                    return Err(Error::InvalidScenario(
                        "general communication is only modelled with h = 0".into(),
                    ));
                }
            }
        }
        if let Sensors::Mounts { kr, kf } = &sensors {
            if kr.dc_gain().is_zero() || kf.dc_gain().is_zero() {
                return Err(Error::InvalidMount("Kr(0) and Kf(0) must be nonzero".into()));
            }
            require_stable("Kr", kr).map_err(|e| Error::InvalidMount(e.to_string()))?;
            require_stable("Kf", kf).map_err(|e| Error::InvalidMount(e.to_string()))?;
            if !matches!(comm, Comm::None) {
                return Err(Error::InvalidScenario(
                    "sensor mounts and communication cannot be combined".into(),
                ));
            }
            if headway != 0.0 {
                return Err(Error::InvalidScenario(
                    "sensor mounts are only modelled with h = 0".into(),
                ));
            }
        }
        Ok(ChainScenario {
            headway,
            controller,
            comm,
            sensors,
        })
    }

    /// No communication, ideal sensors, headway `h`.
    pub fn headway(controller: RationalTF, h: f64) -> Result<Self> {
        Self::new(h, controller, Comm::None, Sensors::Identity)
    }

    pub fn cacc(controller: RationalTF, h: f64, b: RationalTF, hc: RationalTF, w: RationalTF) -> Result<Self> {
        Self::new(h, controller, Comm::Cacc { b, h: hc, w }, Sensors::Identity)
    }

    pub fn general(
        controller: RationalTF,
        f: RationalTF,
        g: RationalTF,
        hc: RationalTF,
        w: RationalTF,
    ) -> Result<Self> {
        Self::new(0.0, controller, Comm::General { f, g, h: hc, w }, Sensors::Identity)
    }

    pub fn mounts(controller: RationalTF, kr: RationalTF, kf: RationalTF) -> Result<Self> {
        Self::new(0.0, controller, Comm::None, Sensors::Mounts { kr, kf })
    }

    pub fn h(&self) -> f64 {
        self.headway
    }

    pub fn k(&self) -> &RationalTF {
        &self.controller
    }

    pub fn comm(&self) -> &Comm {
        &self.comm
    }

    pub fn sensors(&self) -> &Sensors {
        &self.sensors
    }

    pub fn variant(&self) -> Variant {
        match (&self.comm, &self.sensors) {
            (Comm::Cacc { .. }, _) => Variant::Cacc,
            (Comm::General { .. }, _) => Variant::General,
            (Comm::None, Sensors::Mounts { .. }) => Variant::Mounts,
            (Comm::None, Sensors::Identity) => Variant::Headway,
        }
    }

    /// Named transfer functions supplied by the user, for audits.
    pub fn named_tfs(&self) -> Vec<(&'static str, &RationalTF)> {
        let mut out = vec![("K", &self.controller)];
        match &self.comm {
            Comm::None => {}
            Comm::Cacc { b, h, w } => out.extend([("B", b), ("H", h), ("W", w)]),
            Comm::General { f, g, h, w } => out.extend([("F", f), ("G", g), ("H", h), ("W", w)]),
        }
        if let Sensors::Mounts { kr, kf } = &self.sensors {
            out.extend([("Kr", kr), ("Kf", kf)]);
        }
        out
    }
}
