"""Exception hierarchy shared by all modules."""


class ContactLfdError(Exception):
    pass


# geometry
class EmptyCloud(ContactLfdError):
    pass


class TooFewPoints(ContactLfdError):
    pass


class Degenerate(ContactLfdError):
    pass


class NoValidParts(ContactLfdError):
    pass


# pose estimation
class PoseEstimationError(ContactLfdError):
    pass


class NoCorrespondences(PoseEstimationError):
    pass


class LowFitness(PoseEstimationError):
    pass


class NeverObserved(PoseEstimationError):
    pass


# contact analysis
class UnknownObject(ContactLfdError):
    pass


class NoContactPoints(ContactLfdError):
    pass


# primitive learning
class OverlappingContacts(ContactLfdError):
    pass


class MissingPoseTrack(ContactLfdError):
    pass


class WrongPrimitiveKind(ContactLfdError):
    pass


# motion planning
class DimensionMismatch(ContactLfdError):
    pass


class NoSolution(ContactLfdError):
    pass


class PlanningFailure(ContactLfdError):
    pass


class StartInCollision(PlanningFailure):
    pass


class GoalInCollision(PlanningFailure):
    pass


class Timeout(PlanningFailure):
    pass


class DegenerateTrajectory(ContactLfdError):
    pass


# execution
class MissingReference(ContactLfdError):
    pass


# io
class FormatError(ContactLfdError):
    pass


class InvalidScript(ContactLfdError):
    pass
