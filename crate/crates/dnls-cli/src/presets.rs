//! Canned parameter sets for the demonstration pipelines. All presets are
//! qualitative: they use the built-in potentials as stand-ins, so outputs
//! show the phenomena rather than reproduce any external plot bit-for-bit.

use dnls::Setting;

/// One minimization run inside a solve preset.
#[derive(Clone, Copy, Debug)]
pub struct PresetRun {
    /// Short directory tag, unique within the preset.
    pub tag: &'static str,
    /// Site placement.
    pub setting: Setting,
    /// Truncation half-width.
    pub n: usize,
    /// Coupling.
    pub beta: f64,
    /// Flow step.
    pub tau: f64,
    /// Step budget; runs report honestly when this is too small to converge.
    pub max_steps: usize,
}

/// What a preset actually runs.
#[derive(Clone, Copy, Debug)]
pub enum PresetSpec {
    /// A batch of independent minimizations.
    Solve {
        /// Built-in potential name.
        potential: &'static str,
        /// The runs, fanned out over the worker pool.
        runs: &'static [PresetRun],
    },
    /// A scaled-lattice sweep against the continuum heteroclinic.
    Continuum {
        /// Built-in potential name.
        potential: &'static str,
        /// Site placement for the lattice solves.
        setting: Setting,
        /// Continuum coupling.
        beta: f64,
        /// Comparison window half-width.
        window: f64,
        /// Spacings, in sweep order.
        eps_list: &'static [f64],
    },
}

/// A named preset.
#[derive(Clone, Copy, Debug)]
pub struct Preset {
    /// Name accepted by `--preset`.
    pub name: &'static str,
    /// One-line description for the listing.
    pub summary: &'static str,
    /// Parameters.
    pub spec: PresetSpec,
}

/// All built-in presets.
pub fn all() -> &'static [Preset] {
    &[
        Preset {
            name: "fig1",
            summary: "qualitative: both settings at small coupling (cubic, beta 0.25, \
                      n 6, tau 0.1, 150 steps)",
            spec: PresetSpec::Solve {
                potential: "cubic",
                runs: &[
                    PresetRun {
                        tag: "onsite",
                        setting: Setting::OnSite,
                        n: 6,
                        beta: 0.25,
                        tau: 0.1,
                        max_steps: 150,
                    },
                    PresetRun {
                        tag: "intersite",
                        setting: Setting::InterSite,
                        n: 6,
                        beta: 0.25,
                        tau: 0.1,
                        max_steps: 150,
                    },
                ],
            },
        },
        Preset {
            name: "fig2",
            summary: "qualitative: coupling comparison on-site (cubic, beta 1 and 5, \
                      n 12, tau 0.01, 600 steps)",
            spec: PresetSpec::Solve {
                potential: "cubic",
                runs: &[
                    PresetRun {
                        tag: "beta1",
                        setting: Setting::OnSite,
                        n: 12,
                        beta: 1.0,
                        tau: 0.01,
                        max_steps: 600,
                    },
                    PresetRun {
                        tag: "beta5",
                        setting: Setting::OnSite,
                        n: 12,
                        beta: 5.0,
                        tau: 0.01,
                        max_steps: 600,
                    },
                ],
            },
        },
        Preset {
            name: "fig3",
            summary: "qualitative: non-convex plateaus inter-site (doublewell, beta 0.5 \
                      and 2, n 40, tau 0.05, 1000 steps)",
            spec: PresetSpec::Solve {
                potential: "doublewell",
                runs: &[
                    PresetRun {
                        tag: "beta0.5",
                        setting: Setting::InterSite,
                        n: 40,
                        beta: 0.5,
                        tau: 0.05,
                        max_steps: 1000,
                    },
                    PresetRun {
                        tag: "beta2",
                        setting: Setting::InterSite,
                        n: 40,
                        beta: 2.0,
                        tau: 0.05,
                        max_steps: 1000,
                    },
                ],
            },
        },
        Preset {
            name: "fig4",
            summary: "qualitative: continuum limit of inter-site waves (cubic, beta 1, \
                      eps 0.8..0.05, window 6)",
            spec: PresetSpec::Continuum {
                potential: "cubic",
                setting: Setting::InterSite,
                beta: 1.0,
                window: 6.0,
                eps_list: &[0.8, 0.4, 0.2, 0.1, 0.05],
            },
        },
    ]
}

/// Looks a preset up by name.
pub fn find(name: &str) -> Option<&'static Preset> {
    all().iter().find(|p| p.name == name)
}
