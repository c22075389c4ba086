"""
Service layer for the toolkit.

Each service class groups the stateless operations of one concern (montage
geometry, variance tracking, correction, simulation, evaluation, files and
streams) so the command layer stays thin and every operation is testable on
its own.
"""
