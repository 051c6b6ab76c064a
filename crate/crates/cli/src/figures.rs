//! Bundled configurations behind `heco reproduce`.

pub struct Figure {
    pub id: &'static str,
    pub about: &'static str,
    pub configs: &'static [(&'static str, &'static str)],
}

macro_rules! cfg {
    ($name:literal) => {
        ($name, include_str!(concat!("../configs/", $name, ".toml")))
    };
}

pub const FIGURES: &[Figure] = &[
    Figure {
        id: "fig2a",
        about: "hard-wall intensity, 10 meV",
        configs: &[cfg!("fig2a")],
    },
    Figure {
        id: "fig2b",
        about: "hard-wall intensity, 40 meV",
        configs: &[cfg!("fig2b")],
    },
    Figure {
        id: "fig4a",
        about: "wave-packet intensity, full potential, 10 meV",
        configs: &[cfg!("fig4_full_10")],
    },
    Figure {
        id: "fig4b",
        about: "wave-packet intensity, repulsive adsorbate, 10 meV",
        configs: &[cfg!("fig4_repulsive_10")],
    },
    Figure {
        id: "fig4c",
        about: "wave-packet intensity, full potential, 40 meV (1024^2 grid, slow)",
        configs: &[cfg!("fig4_full_40")],
    },
    Figure {
        id: "fig4d",
        about: "wave-packet intensity, repulsive adsorbate, 40 meV (1024^2 grid, slow)",
        configs: &[cfg!("fig4_repulsive_40")],
    },
    Figure {
        id: "fig5",
        about: "ray separatrices and a ray fan at 20 degrees",
        configs: &[cfg!("fig5_separatrices"), cfg!("fig5_rays")],
    },
    Figure {
        id: "fig7",
        about: "classical deflection, trajectories and energy diagram at 20 degrees",
        configs: &[cfg!("fig7_trajectories"), cfg!("fig7_energy")],
    },
    Figure {
        id: "fig9",
        about: "classical deflection functions and rainbows, full and repulsive",
        configs: &[cfg!("fig9")],
    },
    Figure {
        id: "fig10",
        about: "Bohmian trajectories from the packet centre line",
        configs: &[cfg!("fig10")],
    },
];

pub fn find(id: &str) -> Option<&'static Figure> {
    FIGURES.iter().find(|f| f.id == id)
}

pub fn ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}
