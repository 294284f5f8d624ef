//! The two reference systems shipped with the toolkit, with their published
//! gains, graphs and default initial conditions.

use crate::agent::AgentModel;
use crate::graph::CommGraph;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Example1,
    Example2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(Preset::Example1),
            "example2" => Some(Preset::Example2),
            _ => None,
        }
    }

    pub fn model(self) -> AgentModel {
        match self {
            Preset::Example1 => example1_model(),
            Preset::Example2 => example2_model(),
        }
    }

    pub fn k(self) -> Matrix {
        match self {
            Preset::Example1 => example1_k(),
            Preset::Example2 => example2_k(),
        }
    }

    pub fn f(self) -> Matrix {
        match self {
            Preset::Example1 => example1_f(),
            Preset::Example2 => example2_f(),
        }
    }

    pub fn x_r0(self) -> Vec<f64> {
        match self {
            Preset::Example1 => vec![1.0, 0.5],
            Preset::Example2 => vec![1.0, -1.0, 0.5, 0.25, -0.5, 1.0, 0.0],
        }
    }

    /// The horizon each preset is judged on.
    pub fn horizon(self) -> f64 {
        match self {
            Preset::Example1 => 30.0,
            Preset::Example2 => 60.0,
        }
    }

    /// The small (3-node) and large (10-node) reference graphs.
    pub fn graphs(self) -> [(&'static str, CommGraph); 2] {
        [
            ("graph_a", CommGraph::example_a()),
            ("graph_b", CommGraph::example_b()),
        ]
    }
}

/// Double integrator with position output.
pub fn example1_model() -> AgentModel {
    AgentModel::new(
        Matrix::from_row_slice(2, 2, &[0., 1., 0., 0.]),
        Matrix::from_row_slice(2, 1, &[0., 1.]),
        Matrix::from_row_slice(1, 2, &[1., 0.]),
    )
    .expect("static model")
}

pub fn example1_k() -> Matrix {
    Matrix::from_row_slice(1, 2, &[-10., -2.])
}

pub fn example1_f() -> Matrix {
    Matrix::from_row_slice(2, 1, &[1., 2.])
}

pub fn example2_a() -> Matrix {
    #[rustfmt::skip]
    let a = Matrix::from_row_slice(7, 7, &[
        0., 0., 1., 0., 0., 0., 0.,
        0., 0., 0., 1., 0., 0., 0.,
        0., 0., 0., 0., 0., 0., 0.,
        0., 0., 0., 0., 0., 0., 0.,
        0., 0., 0., 0., 0., 0., 0.,
        0., 0., 0., 0., 0., 0., 1.,
        0., 0., 0., 0., 0., -1., 0.,
    ]);
    a
}

/// Two double integrators, one single integrator and one oscillator.
pub fn example2_model() -> AgentModel {
    #[rustfmt::skip]
    let b = Matrix::from_row_slice(7, 3, &[
        0., 1., 3.,
        0., 0., 5.,
        1., 2., 4.,
        0., 1., 6.,
        0., 0., 1.,
        1., 1., 0.,
        1., 0., 1.,
    ]);
    #[rustfmt::skip]
    let c = Matrix::from_row_slice(4, 7, &[
        1., 1., 1., 1., 1., 1., 1.,
        1., 0., 0., 0., 0., 0., 0.,
        0., 0., 0., 0., 0., 0., 1.,
        0., 0., 1., 1., 1., 1., 1.,
    ]);
    AgentModel::new(example2_a(), b, c).expect("static model")
}

pub fn example2_f() -> Matrix {
    #[rustfmt::skip]
    let f = Matrix::from_row_slice(7, 4, &[
        0.55, 6.81, 0.73, -0.42,
        7.97, -7.41, 1.30, -8.30,
        0.57, 10.0, 2.97, 0.37,
        11.14, -10.32, 5.06, -11.24,
        -5.92, -0.92, 3.66, 7.89,
        -7.01, 1.98, -14.49, 8.53,
        1.35, -0.27, 8.48, -1.52,
    ]);
    f
}

pub fn example2_k() -> Matrix {
    #[rustfmt::skip]
    let k = Matrix::from_row_slice(3, 7, &[
        -1., 0., -4., 6., -22., -1., 1.,
        -2., -1., -3., -2., 18., 0., 1.,
        -4., -6., -5., -3., -61., -1., 0.,
    ]);
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in [Preset::Example1, Preset::Example2] {
            assert_eq!(Preset::from_name(p.name()), Some(p));
            assert_eq!(p.x_r0().len(), p.model().n());
        }
        assert_eq!(Preset::from_name("example3"), None);
    }

    #[test]
    fn gain_shapes_match_models() {
        for p in [Preset::Example1, Preset::Example2] {
            let model = p.model();
            assert_eq!(p.k().shape(), (model.m(), model.n()));
            assert_eq!(p.f().shape(), (model.n(), model.p()));
        }
    }
}
