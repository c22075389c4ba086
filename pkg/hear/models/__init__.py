from hear.models.config import HearConfig, SmoothingSpec
from hear.models.montage import Electrode, ElectrodeMontage, InterpolationMatrix, Neighbor
from hear.models.calibration import CalibrationModel
from hear.models.state import CorrectorState, VarianceState
from hear.models.simulation import ArtifactEvent, MrcpJitter, SimulatedDataset, SimulationSpec
from hear.models.evaluation import ContaminationMask, MetricRecord, OutlierCriteria, OutlierReport
from hear.models.recording import Recording, RecordingHeader, TrialSegment

__all__ = [
    'HearConfig', 'SmoothingSpec',
    'Electrode', 'ElectrodeMontage', 'InterpolationMatrix', 'Neighbor',
    'CalibrationModel',
    'CorrectorState', 'VarianceState',
    'ArtifactEvent', 'MrcpJitter', 'SimulatedDataset', 'SimulationSpec',
    'ContaminationMask', 'MetricRecord', 'OutlierCriteria', 'OutlierReport',
    'Recording', 'RecordingHeader', 'TrialSegment',
]
