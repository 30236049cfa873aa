//! Compiles the guide's code blocks as doc-tests, keeping `book/` in sync
//! with the library. Only built when rustdoc collects doc-tests.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $path))]
        mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(language, "language.md");
chapter!(analysis, "analysis.md");
chapter!(semantics, "semantics.md");
chapter!(aggregates, "aggregates.md");
chapter!(grounding, "grounding.md");
chapter!(cli, "cli.md");
chapter!(oracle, "oracle.md");
