//! Water-quality telemetry toolkit: a Sigfox frame codec, an RFTDMA network
//! simulator, a survey data pipeline and a stacked LSTM forecaster.

pub mod codec;
pub mod netsim;
pub mod data;
pub mod forecast;
