"""
혼합 교통 고속도로 에피소드 시뮬레이터
"""
