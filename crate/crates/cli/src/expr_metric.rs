//! Inverse metric given as sixteen arithmetic expressions.

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};

use contactrel::{Mat4, Metric, SpacetimePoint};

/// Names bound while evaluating an expression.
pub const VARIABLES: [&str; 10] = ["t", "x", "y", "z", "q0", "q1", "q2", "q3", "phi", "c"];

/// `g^{μν}(q, φ)` from user expressions. Derivatives always go through the
/// finite-difference fallback.
#[derive(Debug, Clone)]
pub struct ExpressionMetric {
    nodes: Vec<Node<DefaultNumericTypes>>,
    c: f64,
    phi_dependent: bool,
}

impl ExpressionMetric {
    /// Compiles the upper triangle of `entries`; the caller is responsible for
    /// checking that the matrix is symmetric. Errors carry `(row, col, message)`.
    pub fn compile(entries: &[[String; 4]; 4], c: f64) -> Result<Self, (usize, usize, String)> {
        let mut nodes = Vec::with_capacity(10);
        let mut phi_dependent = false;
        for i in 0..4 {
            for j in i..4 {
                let node = build_operator_tree::<DefaultNumericTypes>(&entries[i][j])
                    .map_err(|e| (i, j, e.to_string()))?;
                for var in node.iter_variable_identifiers() {
                    if !VARIABLES.contains(&var) {
                        return Err((i, j, format!("unknown variable `{var}`")));
                    }
                    phi_dependent |= var == "phi";
                }
                nodes.push(node);
            }
        }
        let m = Self {
            nodes,
            c,
            phi_dependent,
        };
        // surface evaluation errors (type errors, unknown functions) up front
        m.evaluate(&SpacetimePoint([0.0, 1.0, 1.0, 1.0]), 0.0)
            .map_err(|(k, e)| {
                let (i, j) = upper_index(k);
                (i, j, e)
            })?;
        Ok(m)
    }

    fn evaluate(&self, q: &SpacetimePoint, phi: f64) -> Result<Mat4, (usize, String)> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        let [t, x, y, z] = q.0;
        let values = [t, x, y, z, t, x, y, z, phi, self.c];
        for (name, v) in VARIABLES.iter().zip(values) {
            ctx.set_value((*name).to_string(), Value::Float(v))
                .map_err(|e| (0, e.to_string()))?;
        }
        let mut g = [[0.0; 4]; 4];
        for (k, node) in self.nodes.iter().enumerate() {
            let v = node
                .eval_number_with_context(&ctx)
                .map_err(|e| (k, e.to_string()))?;
            let (i, j) = upper_index(k);
            g[i][j] = v;
            g[j][i] = v;
        }
        Ok(g)
    }
}

fn upper_index(k: usize) -> (usize, usize) {
    const IDX: [(usize, usize); 10] = [
        (0, 0),
        (0, 1),
        (0, 2),
        (0, 3),
        (1, 1),
        (1, 2),
        (1, 3),
        (2, 2),
        (2, 3),
        (3, 3),
    ];
    IDX[k]
}

impl Metric for ExpressionMetric {
    fn inverse(&self, q: &SpacetimePoint, phi: f64) -> Mat4 {
        // NaN entries are rejected downstream as a non-finite metric
        self.evaluate(q, phi).unwrap_or([[f64::NAN; 4]; 4])
    }

    fn is_phi_independent(&self) -> bool {
        !self.phi_dependent
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(diag: [&str; 4]) -> [[String; 4]; 4] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i == j {
                    diag[i].to_string()
                } else {
                    "0".to_string()
                }
            })
        })
    }

    #[test]
    fn flat_expressions() {
        let m = ExpressionMetric::compile(&entries(["-1", "1", "1", "1"]), 1.0).unwrap();
        let g = m.inverse(&SpacetimePoint([0.3, 1.0, 2.0, 3.0]), 0.5);
        assert_eq!(g[0][0], -1.0);
        assert_eq!(g[3][3], 1.0);
        assert!(m.is_phi_independent());
    }

    #[test]
    fn phi_dependence_detected() {
        let m =
            ExpressionMetric::compile(&entries(["-(1 + 0.1 * phi)", "1", "1", "1"]), 1.0).unwrap();
        assert!(!m.is_phi_independent());
        let g = m.inverse(&SpacetimePoint([0.0; 4]), 2.0);
        assert!((g[0][0] + 1.2).abs() < 1e-15);
    }

    #[test]
    fn functions_and_variables() {
        let m =
            ExpressionMetric::compile(&entries(["-1 + 0.01 * math::sin(x)", "1", "1", "1"]), 1.0)
                .unwrap();
        let g = m.inverse(&SpacetimePoint([0.0, 0.5, 0.0, 0.0]), 0.0);
        assert!((g[0][0] - (-1.0 + 0.01 * 0.5f64.sin())).abs() < 1e-15);
    }

    #[test]
    fn unknown_variable_rejected() {
        let err = ExpressionMetric::compile(&entries(["-1", "w", "1", "1"]), 1.0).unwrap_err();
        assert_eq!((err.0, err.1), (1, 1));
        assert!(err.2.contains("`w`"));
    }
}
