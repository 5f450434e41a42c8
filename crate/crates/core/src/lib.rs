pub mod cascade;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod imaging;
pub mod llm;
pub mod text;

// The guide's chapters are compiled as doctests so their snippets keep
// building against the current API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/imaging.md")]
    mod imaging {}
    #[doc = include_str!("../../../book/src/text-extraction.md")]
    mod text_extraction {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/llm-gateway.md")]
    mod llm_gateway {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/http-service.md")]
    mod http_service {}
}
