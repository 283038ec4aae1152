"""Exception hierarchy.

``MalformedData`` subclasses map to CLI exit code 2, ``ConfigError`` to 3.
"""


class PatternAugError(Exception):
    pass


class MalformedData(PatternAugError):
    pass


class MalformedCloud(MalformedData):
    pass


class MalformedLabel(MalformedData):
    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MissingCalibKey(MalformedData):
    def __init__(self, key):
        self.key = key
        super().__init__(f"calibration is missing {key}")


class MalformedCalib(MalformedData):
    pass


class MalformedDatabase(MalformedData):
    pass


class DegenerateBox(PatternAugError):
    pass


class DegenerateLocation(PatternAugError):
    pass


class OutOfGrid(PatternAugError):
    pass


class EmptyClass(PatternAugError):
    def __init__(self, class_name):
        self.class_name = class_name
        super().__init__(f"no database objects for class {class_name!r}")


class TooFewSamples(PatternAugError):
    pass


class EmptyCloud(PatternAugError):
    pass


class ConfigError(PatternAugError):
    pass
