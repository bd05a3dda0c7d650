"""Side-channel leakage simulation and analysis for shielded devices.

Physics-based synthesis of passive EM and active RF backscatter traces,
plus the statistical pipeline (frequency ranking, PCA, linear SVM, FastICA)
that quantifies how much workload information each channel leaks through a
given shield.
"""

from .analysis import (ClassifierReport, FrequencyScores, IcaModel, PcaModel,
                       SvmModel, amari_index, evaluate, ica_fit, ica_transform,
                       pca_fit, pca_transform, score_frequencies, select_top_k,
                       silhouette, svm_predict, svm_train_cv)
from .configfile import ConfigError, parse_config
from .defaults import (default_acquisition, default_device, default_probe,
                       default_programs, default_shields, default_sources)
from .dsp import (Scaler, band_select, baseline_reference, remove_baseline,
                  standardize, subtract_baseline, to_magnitude)
from .harness import (ComparisonTable, ExperimentConfig, PipelineError,
                      PipelineResult, countermeasure_sweep, default_config,
                      emit_report, fit_and_evaluate, render_report,
                      reproduce_classification_table, run_pipeline,
                      stratified_split)
from .physics import (CurrentSource, CurrentSourceSet, DeviceImpedanceModel,
                      ProbeModel, ProgramId, ProgramProfile, ShieldProfile,
                      backscatter_response, device_impedance, leakage_model,
                      probe_voltage_em, randomize_impedance,
                      reflection_coefficient, shield_attenuation)
from .synth import (AcquisitionConfig, Modality, TraceSet,
                    average_acquisitions, synth_trace_row, synth_trace_set)
from .traceio import (TraceCorruptionError, TraceFormatError, TraceIOError,
                      TraceVersionError, export_csv, read_trace_set,
                      write_trace_set)

__version__ = "0.1.0"
