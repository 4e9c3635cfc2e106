//! How classical map-generalization operators line up with the context
//! operators, kept as data.

use serde::Serialize;

use super::Op;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Correspondence {
    /// Same formal structure.
    Isomorphism,
    /// Same purpose, different mechanism.
    Analogy,
    /// Realized as a mode or parameter of a context operator.
    Subsumed,
    /// No classical counterpart.
    Unmatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorrespondenceRow {
    pub classical: &'static str,
    pub context: Op,
    pub kind: Correspondence,
}

pub const CORRESPONDENCE: [CorrespondenceRow; 9] = {
    use Correspondence::*;
    const fn row(classical: &'static str, context: Op, kind: Correspondence) -> CorrespondenceRow {
        CorrespondenceRow { classical, context, kind }
    }
    [
        row("selection", Op::Selection, Isomorphism),
        row("simplification", Op::Simplification, Analogy),
        row("aggregation", Op::Aggregation, Isomorphism),
        row("typification", Op::Selection, Subsumed),
        row("displacement", Op::Displacement, Analogy),
        row("collapse", Op::ForwardProjection, Subsumed),
        row("symbolization", Op::Layering, Isomorphism),
        row("map projection", Op::ForwardProjection, Isomorphism),
        row("field survey", Op::Reconnaissance, Unmatched),
    ]
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_context_operator_family_appears() {
        for op in [
            Op::Reconnaissance,
            Op::Selection,
            Op::Simplification,
            Op::Aggregation,
            Op::ForwardProjection,
            Op::Displacement,
            Op::Layering,
        ] {
            assert!(CORRESPONDENCE.iter().any(|r| r.context == op), "{op}");
        }
        let subsumed = CORRESPONDENCE.iter().filter(|r| r.kind == Correspondence::Subsumed).count();
        assert_eq!(subsumed, 2);
    }
}
