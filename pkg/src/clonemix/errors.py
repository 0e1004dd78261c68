"""Exception hierarchy.

Malformed input raises; business outcomes (a tree that does not generate a
tensor, an empty solution set) are returned as values.
"""


class ClonemixError(ValueError):
    pass


class NegativeEntry(ClonemixError):
    def __init__(self, sample, character, state, value):
        self.sample, self.character, self.state, self.value = sample, character, state, value
        super().__init__(f"negative frequency {value} at sample {sample}, character {character}, state {state}")


class RowSumMismatch(ClonemixError):
    def __init__(self, sample, character, total):
        self.sample, self.character, self.total = sample, character, total
        super().__init__(f"frequencies of character {character} in sample {sample} sum to {total}, not 1")


class UnknownState(ClonemixError):
    pass


class IncompleteTree(ClonemixError):
    pass


class InconsistentTree(ClonemixError):
    pass


class SamePair(ClonemixError):
    pass


class InvalidUsage(ClonemixError):
    pass


class IncompatibleProportions(ClonemixError):
    pass


class EmptyIntersection(ClonemixError):
    pass


class UnsupportedState(ClonemixError):
    pass


class ZeroDenominator(ClonemixError):
    pass


class InstanceTooLarge(ClonemixError):
    pass


class PreconditionViolated(ClonemixError):
    pass


class EmptySolutionSet(ClonemixError):
    pass
