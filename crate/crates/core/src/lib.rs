//! Colour-contrast auditing of archived web pages.
//!
//! The crate is organised as a pipeline: [`ccindex`] locates a homepage
//! capture in a crawl, [`fetch`] retrieves its WARC record by byte range,
//! [`warc`] unpacks the archived HTTP response, [`extract`] and [`css`] pull
//! colour declarations out of the HTML, [`pairing`] turns them into
//! foreground/background pairs, [`contrast`] scores each pair, and
//! [`pipeline`] / [`report`] tie it together and summarise a corpus.

mod cache;
pub mod category;
pub mod ccindex;
pub mod color;
pub mod contrast;
pub mod css;
pub mod extract;
pub mod fetch;
pub mod http;
mod named;
pub mod pairing;
pub mod pipeline;
pub mod report;
pub mod warc;

pub use color::{hsl_to_rgb, parse_color, ColorParseError, ColorValue, NonColorKeyword, RgbaColor};
pub use contrast::{assess, contrast_ratio, linearize_channel, relative_luminance, ContrastResult, Luminance};
pub use css::{extract_background_shorthand_color, parse_style_block, ColorProperty};
pub use extract::{extract_declarations, Origin, RuleId, StyleDeclaration};
pub use pairing::{build_pairings, resolve_alpha, ColorPairing, Provenance};
pub use ccindex::{CaptureLocation, CaptureLocator, IndexClient, IndexConfig, IndexError, LocationEntry, LocationTable};
pub use fetch::{ArchiveFetcher, FetchError, FetchPolicy};
pub use pipeline::{analyse_html, analyse_record, AssessedPairing, Outcome, Pipeline, SiteAudit};
pub use warc::{parse_http_response, read_record, ArchivedResponse, WarcError, WarcRecord};
pub use report::{aggregate, render, AggregateReport, ReportFormat};
